//! Prints head and tail residuals of every optimizer on one synthetic preset.
//!
//! cargo run --release --example compare -- <setting> <mk> <lr> <lambda> <trials> [data_seed]

use oarima::experiment::{compare, DataSource, OptimizerConfig, RunSpec};
use oarima::synth::{generate, GeneratorSpec};
use oarima::{ModelConfig, OptimizerKind};

fn main() -> oarima::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.into());
    let setting: u8 = arg(0, "1").parse().unwrap();
    let mk: usize = arg(1, "5").parse().unwrap();
    let lr: f64 = arg(2, "0.05").parse().unwrap();
    let lambda: f64 = arg(3, "2000").parse().unwrap();
    let trials: usize = arg(4, "30").parse().unwrap();
    let data_seed: u64 = arg(5, "0").parse().unwrap();

    let series = generate(&GeneratorSpec::preset(setting, data_seed)?)?;
    let spec = RunSpec::new(
        ModelConfig::new(mk, 0, 0),
        OptimizerConfig::new(OptimizerKind::Combined { lambda }, lr),
        RunSpec::seeds(0, trials),
    );
    let data = DataSource::Series(series);
    for entry in compare(&spec, &data, &OptimizerKind::all(lambda))? {
        match &entry.curve {
            Some(c) => println!(
                "{:>10}  head {:.5}  [4500,5000) {:.5}  [5000,5500) {:.5}  tail {:.5}",
                entry.label,
                c.window_mean(0..1000),
                c.window_mean(4500..5000),
                c.window_mean(5000..5500),
                c.tail_mean()
            ),
            None => println!("{:>10}  diverged", entry.label),
        }
    }
    Ok(())
}
