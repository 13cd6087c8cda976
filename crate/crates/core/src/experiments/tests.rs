use super::*;
use crate::experiments::io::check_header;

fn small() -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.n_seeds = 2;
    c.outlier.steps = 30;
    c.outlier.n_particles = 100;
    c.outlier.crps_samples = 50;
    c.viability.enkf_members = 50;
    c.viability.fourdvar_window = 7;
    c.pl.n_particles = 100;
    c.pl.steps = 40;
    c.ns2d = small_ns2d(0.2, 0.2);
    c
}

fn small_ns2d(nu_cv: f64, forcing_cv: f64) -> Ns2dConfig {
    Ns2dConfig {
        n: 16,
        t_final: 0.2,
        dt: 1e-2,
        members: 6,
        energy_every: 5,
        nu: LogNormalPrior { median: 2e-2, cv: nu_cv },
        forcing: LogNormalPrior { median: 0.5, cv: forcing_cv },
        ..Ns2dConfig::default()
    }
}

fn files(dir: &std::path::Path, r: &RunReport) -> Vec<Vec<u8>> {
    r.outputs.iter().map(|f| std::fs::read(dir.join(f)).unwrap()).collect()
}

#[test]
fn every_scenario_is_bit_reproducible_and_schema_valid() {
    let cfg = small();
    let headers = [
        ("ess.csv", io::ESS_HEADER),
        ("energy.csv", io::ENERGY_HEADER),
        ("filter.csv", io::FILTER_HEADER),
        ("summary.csv", io::SUMMARY_HEADER),
        ("tau.csv", io::TAU_HEADER),
    ];
    for sc in [Scenario::PlVsSis, Scenario::Ns2dUq, Scenario::NigRbpf1d, Scenario::Viability] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let ra = run_scenario(sc, &cfg, 5, a.path()).unwrap();
        let rb = run_scenario(sc, &cfg, 5, b.path()).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(files(a.path(), &ra), files(b.path(), &rb), "{sc:?}");
        assert!(ra.outputs.contains(&"manifest.toml".to_string()));
        for (f, h) in headers {
            if ra.outputs.iter().any(|o| o == f) {
                check_header(&a.path().join(f), h).unwrap();
            }
        }
        let c = tempfile::tempdir().unwrap();
        let rc = run_scenario(sc, &cfg, 6, c.path()).unwrap();
        assert_ne!(files(a.path(), &ra)[0], files(c.path(), &rc)[0], "{sc:?} ignores the seed");
    }
}

#[test]
fn manifest_config_reproduces_the_run() {
    let cfg = small();
    let a = tempfile::tempdir().unwrap();
    let ra = run_scenario(Scenario::NigRbpf1d, &cfg, 3, a.path()).unwrap();
    let v: toml::Value = toml::from_str(&std::fs::read_to_string(a.path().join("manifest.toml")).unwrap()).unwrap();
    let back: ExperimentConfig = v["config"].clone().try_into().unwrap();
    let seed = v["seed"].as_integer().unwrap() as u64;
    let b = tempfile::tempdir().unwrap();
    let rb = run_scenario(Scenario::NigRbpf1d, &back, seed, b.path()).unwrap();
    assert_eq!(files(a.path(), &ra)[..2], files(b.path(), &rb)[..2]);
}

#[test]
fn filter_rows_cover_every_method_and_step() {
    let cfg = small();
    let r = run_viability_baselines(&cfg, 0).unwrap();
    let rows = r.filter_rows();
    assert_eq!(rows.len(), 2 * 5 * 30);
    for m in ["forecast", "4dvar"] {
        assert!(rows.iter().filter(|x| x.method == m).all(|x| x.lo90.0.is_none() && x.hi90.0.is_none()));
        assert_eq!(r.summary_for(m).unwrap().coverage90.0, None);
    }
    for m in ["enkf", "rbpf", "kf"] {
        let s = r.summary_for(m).unwrap();
        assert!(s.coverage90.0.is_some() && s.seed_count == 2);
        assert!(rows
            .iter()
            .filter(|x| x.method == m)
            .all(|x| x.lo90.0.unwrap() <= x.estimate && x.estimate <= x.hi90.0.unwrap()));
    }
    // The tau trace belongs to the RBPF and has one row per step and seed.
    let taus = r.tau_rows();
    assert_eq!(taus.len(), 2 * 30);
    assert!(taus.iter().all(|t| t.tau_mean > 0.0));
}

#[test]
fn summary_is_median_of_seed_scores() {
    let mut cfg = small();
    cfg.n_seeds = 3;
    let r = run_nig_rbpf_1d(&cfg, 0).unwrap();
    let kf: Vec<f64> = r.scores.iter().filter(|s| s.method == "kf").map(|s| s.rmse).collect();
    assert_eq!(kf.len(), 3);
    let mut sorted = kf.clone();
    sorted.sort_by(f64::total_cmp);
    assert_eq!(r.summary_for("kf").unwrap().rmse, sorted[1]);
}

#[test]
fn include_b_adds_a_third_method() {
    let mut cfg = small();
    cfg.outlier.include_b = true;
    let r = run_nig_rbpf_1d(&cfg, 0).unwrap();
    let names: Vec<&str> = r.summary.iter().map(|s| s.method.as_str()).collect();
    assert_eq!(names, ["kf", "rbpf", "rbpf_b"]);
}

#[test]
fn median_examples() {
    assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
}

#[test]
fn collapsed_priors_give_identical_members() {
    let mut c = small_ns2d(0.0, 0.0);
    c.members = 5;
    let r = run_ns2d_uq(&c, 1).unwrap();
    assert!(r.std_field.values.iter().all(|&s| s == 0.0));
    assert_eq!(r.mean_field.values, r.sample_field.values);
    assert!(r.energy.iter().all(|e| e.e_lo90 == e.e_hi90 && e.e_mean == e.e_lo90));
    assert!(r.members.iter().all(|m| m.nu == 2e-2 && m.forcing == 0.5));
}

#[test]
fn energy_band_widens_with_prior_width() {
    let widths = |cv: f64| -> Vec<f64> {
        (0..5)
            .map(|s| run_ns2d_uq(&small_ns2d(cv, cv), 10 + s).unwrap().mean_band_width())
            .collect()
    };
    let (narrow, wide) = (median(&widths(0.1)), median(&widths(0.4)));
    assert!(wide > narrow, "narrow {narrow}, wide {wide}");
}

#[test]
fn larger_viscosity_dissipates_more_at_matched_forcing() {
    let mut c = small_ns2d(0.5, 0.3);
    c.members = 8;
    c.members_per_forcing = 4;
    let r = run_ns2d_uq(&c, 4).unwrap();
    for g in 0..2 {
        let grp: Vec<&MemberSummary> = r.members.iter().filter(|m| m.group == g).collect();
        assert!(grp.iter().all(|m| m.forcing == grp[0].forcing));
        let max_nu = grp.iter().max_by(|a, b| a.nu.total_cmp(&b.nu)).unwrap();
        let min_z = grp.iter().min_by(|a, b| a.terminal_enstrophy.total_cmp(&b.terminal_enstrophy)).unwrap();
        assert_eq!(max_nu.index, min_z.index);
    }
}

#[test]
fn energy_rows_are_ordered_and_start_at_zero() {
    let r = run_ns2d_uq(&small_ns2d(0.2, 0.2), 2).unwrap();
    assert_eq!(r.energy[0].t, 0.0);
    assert_eq!(r.energy.len(), 5);
    assert!((r.energy.last().unwrap().t - 0.2).abs() < 1e-12);
    assert!(r.energy.iter().all(|e| e.e_lo90 <= e.e_mean && e.e_mean <= e.e_hi90));
    // Every member starts from the same field.
    assert_eq!(r.energy[0].e_lo90, r.energy[0].e_hi90);
}

#[test]
fn pl_rows_and_coverage_bookkeeping() {
    let cfg = small();
    let r = run_pl_vs_sis(&cfg, 0).unwrap();
    assert_eq!(r.rows().len(), 2 * 40);
    let med = r.median_ess();
    assert_eq!(med.len(), 40);
    assert!(med.iter().all(|&(p, s)| p > 0.0 && p <= 100.0 + 1e-9 && s > 0.0 && s <= 100.0 + 1e-9));
    for k in 0..2 {
        let f = r.coverage_fraction(k);
        assert!((0.0..=1.0).contains(&f));
        let direct = r.seeds.iter().filter(|s| s.final_bands[k].0 <= cfg.pl.theta_true[k] && cfg.pl.theta_true[k] <= s.final_bands[k].1).count();
        assert_eq!(f, direct as f64 / 2.0);
    }
}

#[test]
fn validation_rows_report_failures_by_name() {
    let cfg = config::ValidateConfig {
        lamb_oseen_n: vec![16, 32],
        heat_paths: 200,
        nig_draws: 10_000,
        enkf_members: 2000,
    };
    let rows = run_validation(&cfg, 0).unwrap();
    let names: Vec<&str> = rows.iter().map(|r| r.check.as_str()).collect();
    assert!(names.contains(&"lamb_oseen_ratio_n32_over_n16"));
    assert!(names.contains(&"nig_total_mass"));
    let mass = rows.iter().find(|r| r.check == "nig_total_mass").unwrap();
    assert!(mass.pass);
    let d = tempfile::tempdir().unwrap();
    let mut full = ExperimentConfig::default();
    full.validate = cfg;
    let rep = run_scenario(Scenario::Validate, &full, 0, d.path()).unwrap();
    let failed: Vec<String> = rows.iter().filter(|r| !r.pass).map(|r| r.check.clone()).collect();
    assert_eq!(rep.failed_checks, failed);
    check_header(&d.path().join("validation.csv"), io::VALIDATION_HEADER).unwrap();
}
