use std::time::Instant;
use trafficast::experiment::{run_matrix, ExperimentConfig, WindowChoice};
use trafficast::synth::{generate, SynthConfig};
use trafficast::ModelKind;

fn probe(name: &str, synth: &SynthConfig, epochs: usize) {
    let (series, mask) = generate(synth).unwrap();
    let cfg = ExperimentConfig {
        window: WindowChoice::Fixed(6),
        epochs,
        ..ExperimentConfig::new(ModelKind::ALL.to_vec())
    };
    let t0 = Instant::now();
    let reports = run_matrix(&series, &cfg).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    println!("== {name} ({} anomalies, {epochs} epochs, {secs:.0} s)", mask.iter().filter(|&&f| f).count());
    let mut improvements = Vec::new();
    for kind in ModelKind::ALL {
        let raw = reports.iter().find(|r| r.model_kind == kind && !r.adjusted).unwrap();
        let adj = reports.iter().find(|r| r.model_kind == kind && r.adjusted).unwrap();
        let imp = (raw.holdout_mape - adj.holdout_mape) / raw.holdout_mape * 100.0;
        improvements.push(imp);
        println!("  {:>12}: raw {:.3}%  adj {:.3}%  improvement {:+.1}%", kind.token(), raw.holdout_mape, adj.holdout_mape, imp);
    }
    let wins = improvements.iter().filter(|&&i| i > 0.0).count();
    println!("  direction: {wins}/5, mean improvement {:+.1}%", improvements.iter().sum::<f64>() / 5.0);
}

fn main() {
    let a = SynthConfig {
        base_gbps: 10.0, noise_sigma: 0.5, anomaly_rate: 0.02, anomaly_magnitude_sigma: 12.0,
        seed: 7, ..SynthConfig::default()
    };
    probe("A: base10 noise.5 rate.02 mag12", &a, 30);
    let b = SynthConfig { anomaly_rate: 0.01, seed: 7, ..SynthConfig::default() };
    probe("B: defaults rate.01", &b, 30);
}
