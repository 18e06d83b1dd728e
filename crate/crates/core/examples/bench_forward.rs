use swarmmap::bayesian_nn::*;
use std::time::Instant;
fn main() {
    let model = BnnModel::bayesian_mlp(&[2,64,64,64,1], &[Activation::Sine, Activation::Tanh, Activation::Tanh], OutputTransform::Sigmoid, -5.0, 12.0, 1).unwrap();
    let mut noise = NoiseSource::seeded(3);
    // forward passes
    let t = Instant::now();
    let n = 20000;
    let mut acc = 0.0;
    for _ in 0..n { acc += model.forward_sample(&[0.3, 0.4], &mut noise).unwrap()[0]; }
    println!("uncached forward: {:.1} us/pass ({acc:.3})", t.elapsed().as_secs_f64()*1e6/n as f64);
    let t = Instant::now();
    let (m, s) = model.predict_mc(&[0.3,0.4], n, &mut noise).unwrap();
    println!("cached mc pass:   {:.1} us/pass ({:.3} {:.3})", t.elapsed().as_secs_f64()*1e6/n as f64, m[0], s[0]);
    // noise draws alone
    let t = Instant::now();
    let mut acc2 = 0.0;
    for _ in 0..(n*8577) { acc2 += noise.draw(); }
    println!("noise draw: {:.2} ns/draw ({acc2:.1})", t.elapsed().as_secs_f64()*1e9/(n as f64*8577.0));
}
