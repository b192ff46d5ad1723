//! A small consistency sweep on the latent distance model: the share of
//! well-separated pairs Multi-Rank orders wrongly as users are added.

use multirank::agreement::AgreementMode;
use multirank::experiment::{run_synth_trial, ObservationProbability, Preset, SynthConfig};
use multirank::synthgen::{GFamily, Geometry};

fn main() -> multirank::error::Result<()> {
    let sc = SynthConfig {
        dim: 2,
        geometry: Geometry::UnitBallDistance,
        g_family: GFamily::Identity,
        n_items: 40,
        n_users: vec![100, 400],
        p: ObservationProbability::Value(0.3),
        preset: Preset::Continuous,
        separated_fraction: 0.2,
        eps: None,
        seeds: vec![0, 1, 2],
        agreement_mode: AgreementMode::Nonoverlapping,
        consistency_check: false,
    };
    for &n2 in &sc.n_users {
        for &seed in &sc.seeds {
            let t = run_synth_trial(&sc, n2, seed)?.trial;
            println!(
                "n2={n2:>4} seed={seed} eps={:.3} beta={} k={} dis_2eps={:>3} rate={:.2e}",
                t.eps, t.beta, t.k, t.dis, t.rate
            );
        }
    }
    Ok(())
}
