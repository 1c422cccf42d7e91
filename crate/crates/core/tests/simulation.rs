use suprec::boundaries::g_exact;
use suprec::procedures::ProcedureId;
use suprec::risk::lemma1_consistency_check;
use suprec::simharness::{
    read_csv_from, run_grid, run_grid_with_workers, write_csv, AlphaRule, ExperimentConfig, GridCellResult, Model,
    SignalShape,
};

fn base() -> ExperimentConfig {
    ExperimentConfig {
        model: Model::ChiSquare { nu: 1 },
        p: 500,
        beta_grid: vec![0.6],
        r_grid: vec![],
        reps: 2000,
        procedures: vec![ProcedureId::Bonferroni, ProcedureId::Sidak],
        alpha_rule: AlphaRule::Fixed(0.1),
        seed: 424242,
        signal_shape: SignalShape::Equal,
    }
}

fn find(results: &[GridCellResult], proc_: ProcedureId, r: Option<f64>) -> &GridCellResult {
    results
        .iter()
        .find(|c| c.procedure == proc_ && c.r == r)
        .expect("cell present")
}

#[test]
fn null_calibration_of_fwer() {
    let out = run_grid(&base()).unwrap();
    assert_eq!(out.len(), 2);
    let bonf = find(&out, ProcedureId::Bonferroni, None).summary.clone();
    let sid = find(&out, ProcedureId::Sidak, None).summary.clone();
    assert!(bonf.fwer <= 0.1 + 4.0 * bonf.se_fwer, "bonferroni fwer {}", bonf.fwer);
    assert!((sid.fwer - 0.1).abs() <= 4.0 * sid.se_fwer, "sidak fwer {}", sid.fwer);
    // no signals: nothing can be missed
    assert_eq!(bonf.fnr, 0.0);
    assert_eq!(bonf.fwnr, 0.0);
}

#[test]
fn gaussian_null_calibration() {
    let cfg = ExperimentConfig {
        model: Model::GaussianOneSided,
        ..base()
    };
    let out = run_grid(&cfg).unwrap();
    let sid = find(&out, ProcedureId::Sidak, None).summary.clone();
    assert!((sid.fwer - 0.1).abs() <= 4.0 * sid.se_fwer, "sidak fwer {}", sid.fwer);
}

#[test]
fn exact_recovery_improves_with_signal() {
    let g = g_exact(0.6).unwrap();
    let cfg = ExperimentConfig {
        p: 1000,
        r_grid: [0.25, 0.5, 1.0, 1.5, 2.5].iter().map(|m| m * g).collect(),
        reps: 300,
        procedures: vec![ProcedureId::Bonferroni, ProcedureId::BenjaminiHochberg, ProcedureId::OracleExact],
        alpha_rule: AlphaRule::SlowlyVanishing,
        ..base()
    };
    let out = run_grid(&cfg).unwrap();
    assert_eq!(out.len(), 5 * 3);
    let bonf: Vec<_> = out
        .iter()
        .filter(|c| c.procedure == ProcedureId::Bonferroni)
        .map(|c| &c.summary)
        .collect();
    for w in bonf.windows(2) {
        let slack = 4.0 * (w[0].se_p_exact.powi(2) + w[1].se_p_exact.powi(2)).sqrt();
        assert!(w[1].p_exact + slack >= w[0].p_exact, "{} then {}", w[0].p_exact, w[1].p_exact);
    }
    assert!(bonf[0].p_exact < 0.1);
    assert!(bonf[4].p_exact > 0.9);
    // the oracle never does worse than a data-blind procedure
    for (b, o) in bonf.iter().zip(out.iter().filter(|c| c.procedure == ProcedureId::OracleExact)) {
        assert!(o.summary.p_exact + 1e-12 >= b.p_exact);
    }
    for cell in &out {
        assert!(lemma1_consistency_check(&cell.summary), "{cell:?}");
    }
}

#[test]
fn output_independent_of_worker_count() {
    let cfg = ExperimentConfig {
        p: 300,
        beta_grid: vec![0.4, 0.7],
        r_grid: vec![0.5, 2.0, 4.0],
        reps: 150,
        procedures: ProcedureId::ALL.to_vec(),
        signal_shape: SignalShape::Range { half_width: 0.25 },
        ..base()
    };
    let mut bytes = Vec::new();
    for workers in [1, 3, 8] {
        let mut buf = Vec::new();
        write_csv(&run_grid_with_workers(&cfg, workers).unwrap(), &mut buf).unwrap();
        bytes.push(buf);
    }
    assert_eq!(bytes[0], bytes[1]);
    assert_eq!(bytes[0], bytes[2]);

    let back = read_csv_from(bytes[0].as_slice(), "<memory>".as_ref()).unwrap();
    let again = run_grid(&cfg).unwrap();
    assert_eq!(back.len(), again.len());
    for (a, b) in back.iter().zip(&again) {
        assert_eq!(a.procedure, b.procedure);
        assert_eq!(a.r, b.r);
        assert_eq!(a.summary.p_exact, b.summary.p_exact);
        assert_eq!(a.summary.fdr, b.summary.fdr);
    }
}

#[test]
fn seed_changes_results() {
    let mut a = base();
    a.reps = 200;
    let mut b = a.clone();
    b.seed += 1;
    let (ra, rb) = (run_grid(&a).unwrap(), run_grid(&b).unwrap());
    assert_ne!(ra, rb);
}

#[test]
fn extra_grid_cells_do_not_perturb_shared_ones() {
    let small = ExperimentConfig {
        r_grid: vec![1.0],
        reps: 100,
        ..base()
    };
    let large = ExperimentConfig {
        beta_grid: vec![0.3, 0.6],
        r_grid: vec![0.5, 1.0, 2.0],
        ..small.clone()
    };
    let a = run_grid(&small).unwrap();
    let b = run_grid(&large).unwrap();
    for cell in &a {
        let twin = b
            .iter()
            .find(|c| c.beta == cell.beta && c.r == cell.r && c.procedure == cell.procedure)
            .unwrap();
        assert_eq!(twin.summary, cell.summary);
    }
}
