use collab_core::ingest::{assemble_session, Condition, TimestampPattern};
use collab_core::metrics::session_metrics;
use collab_core::simulate::{simulate_session, SimConfig};
use collab_core::stats::{compare_conditions, Indicator};

fn run(seed: u64) -> (f64, f64) {
    let config = SimConfig {
        seed,
        ..SimConfig::default()
    };
    let mut rows = Vec::new();
    for condition in Condition::ALL {
        for team in 0..config.arm(condition).teams {
            let dets = simulate_session(&config, condition, team).unwrap();
            let id = format!("{condition}-{team}");
            let s = assemble_session(&id, condition, dets, &TimestampPattern::default()).unwrap();
            rows.push(session_metrics(&s, 0.7).unwrap());
        }
    }
    let r = compare_conditions(&rows, Indicator::Collaboration).unwrap();
    assert_eq!(r.df_within, 31);
    (r.f_statistic, r.cohens_d)
}

#[test]
fn default_study_detects_the_effect_for_nearly_every_seed() {
    let hits = (0..100u64)
        .map(run)
        .filter(|&(f, d)| f > 0.0 && d > 0.0)
        .count();
    assert!(hits >= 99, "{hits}/100 seeds recovered the effect");
}
