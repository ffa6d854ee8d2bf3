//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero only when a criterion's status differs from the recorded one.

mod common;

use std::process::ExitCode;

use ctc_core::axioms::{check_axiom, check_terminality, Axiom, AxiomConfig};
use ctc_core::dctc::{dctc_apply, solve_max_entropy, ElementaryMorphism, SolverOptions};
use ctc_core::gates::{make_gate, GateSpec};
use ctc_core::graphs::{all_cut_plans, causal_set_to_graph, graph_to_causal_set};
use ctc_core::pctc::{mixsym_compose, mixsym_lift, pctc_superop};
use ctc_core::random::{self, random_channel, split_seed};
use ctc_core::scenarios;
use ctc_core::{trace_distance, DensityMatrix, Model, PctcOutcome, QChannel, Result};

/// Criteria that fail for a documented reason.
const KNOWN_RED: &[u32] = &[12];

type Check = fn() -> Result<Outcome>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

fn grandfather() -> Result<Outcome> {
    let e = scenarios::grandfather_morphism();
    let mixed = DensityMatrix::maximally_mixed(vec![2]);
    let mut worst = 0.0f64;
    for rho in [DensityMatrix::qubit_zero(), DensityMatrix::qubit_one(), DensityMatrix::qubit_plus()] {
        worst = worst.max(trace_distance(&dctc_apply(&e, &rho)?, &mixed)?);
    }
    outcome(worst <= 1e-9, format!("max distance to I/2 {worst:.1e}"))
}

fn entanglement_breaking() -> Result<Outcome> {
    let e = scenarios::entanglement_breaking_morphism();
    let bell_out = dctc_apply(&e, &DensityMatrix::bell())?;
    let bell_dev = trace_distance(&bell_out, &DensityMatrix::maximally_mixed(vec![2, 2]))?;
    let mut r = common::rng(2);
    let mut product_dev = 0.0f64;
    for _ in 0..20 {
        let psi = random::random_pure_state(&mut r, vec![2, 2]);
        let out = dctc_apply(&e, &psi)?;
        let product = out.partial_trace(&[0])?.tensor(&out.partial_trace(&[1])?);
        product_dev = product_dev.max(trace_distance(&out, &product)?);
    }
    outcome(
        bell_dev <= 1e-9 && product_dev <= 1e-8,
        format!("Bell deviation {bell_dev:.1e}, distance to product {product_dev:.1e}"),
    )
}

fn nonlinearity() -> Result<Outcome> {
    let e = scenarios::nonlinearity_morphism();
    let mut worst = 0.0f64;
    for eps in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let out = dctc_apply(&e, &scenarios::nonlinearity_input(eps)?)?;
        worst = worst.max(trace_distance(&out, &scenarios::nonlinearity_expected(eps)?)?);
    }
    outcome(worst <= 1e-9, format!("max distance to the closed form {worst:.1e}"))
}

fn discontinuity() -> Result<Outcome> {
    let zero = DensityMatrix::qubit_zero();
    let mixed = DensityMatrix::maximally_mixed(vec![2]);
    let mut worst = 0.0f64;
    let dephase = make_gate(&GateSpec::DephaseZ(2))?;
    for rho in [zero.clone(), DensityMatrix::qubit_plus()] {
        let want = dephase.apply(&rho)?;
        for eps in [1e-1, 1e-2, 1e-3] {
            worst = worst.max(trace_distance(&scenarios::discontinuity_fixed_point(eps, &rho)?, &want)?);
        }
    }
    let at_zero = scenarios::discontinuity_fixed_point(0.0, &zero)?;
    let zero_dev = trace_distance(&at_zero, &mixed)?;
    let near = scenarios::discontinuity_fixed_point(1e-3, &zero)?;
    let jump = trace_distance(&at_zero, &near)?;
    outcome(
        worst <= 1e-9 && zero_dev <= 1e-9 && (jump - 0.5).abs() <= 1e-6,
        format!("tau(eps) deviation {worst:.1e}, tau(0) deviation {zero_dev:.1e}, jump {jump:.9}"),
    )
}

fn discrimination() -> Result<Outcome> {
    let states = [
        DensityMatrix::qubit_zero(),
        DensityMatrix::qubit_one(),
        DensityMatrix::qubit_plus(),
        DensityMatrix::qubit_minus(),
    ];
    let mut lowest = 1.0f64;
    for (which, psi) in states.iter().enumerate() {
        lowest = lowest.min(scenarios::discrimination_distribution(psi)?[which]);
    }
    outcome(lowest >= 1.0 - 1e-9, format!("lowest probability of the right string {lowest:.12}"))
}

fn terminality() -> Result<Outcome> {
    let cfg = AxiomConfig { trials: 100, dims: vec![2, 3], seed: 6, tolerance: 1e-8 };
    let d = check_terminality(Model::Dctc, &cfg)?;
    let witness = scenarios::grandfather_terminality_witness()?;
    outcome(
        d.max_deviation <= 1e-8 && witness > 0.1,
        format!("D-CTC max deviation {:.1e}, P-CTC witness {witness:.3}", d.max_deviation),
    )
}

fn axiom_suite() -> Result<Outcome> {
    let cfg = AxiomConfig { trials: 50, dims: vec![2, 3], seed: 7, tolerance: 1e-6 };
    let mut ok = true;
    let mut notes = Vec::new();
    for model in Model::ALL {
        for axiom in [Axiom::Naturality, Axiom::Strength, Axiom::Sliding, Axiom::Vanishing] {
            let r = check_axiom(axiom, model, &cfg)?;
            ok &= r.verdict == ctc_core::Verdict::Pass;
            if r.verdict != ctc_core::Verdict::Pass {
                notes.push(format!("{} {} {:.1e}", axiom.name(), model, r.max_deviation));
            }
        }
    }
    let p = check_axiom(Axiom::Yanking, Model::Pctc, &cfg)?;
    let d = check_axiom(Axiom::Yanking, Model::Dctc, &cfg)?;
    let bell = d.bell_deviation.unwrap_or(f64::NAN);
    ok &= p.max_deviation <= 1e-9 && d.verdict == ctc_core::Verdict::Fail && (bell - 0.75).abs() <= 1e-9;
    notes.push(format!("yanking P-CTC {:.1e}, D-CTC Bell probe {bell:.12}", p.max_deviation));
    outcome(ok, notes.join("; "))
}

fn cut_invariance() -> Result<Outcome> {
    let mut worst = 0.0f64;
    let mut plans_seen = 0;
    for k in 0..20 {
        let d = common::random_cv_local_diagram(split_seed(8, k));
        let plans = all_cut_plans(d.graph())?;
        plans_seen += plans.len();
        let probes = common::probes_with_ancilla(&d.in_dims(), 2, split_seed(80, k));
        for model in Model::ALL {
            for i in 0..plans.len() {
                for j in i + 1..plans.len() {
                    worst = worst.max(common::plan_deviation(&d, model, &plans[i], &plans[j], &probes));
                }
            }
        }
    }
    outcome(worst <= 1e-6, format!("{plans_seen} plans over 20 diagrams, max deviation {worst:.1e}"))
}

fn solver_oracle() -> Result<Outcome> {
    let mut gap = f64::NEG_INFINITY;
    let mut residual = 0.0f64;
    for (d, count) in [(2usize, 50u64), (3, 20)] {
        for k in 0..count {
            let t = common::structured_channel(d, k as usize, split_seed(9 + d as u64, k));
            let sol = solve_max_entropy(&t, &SolverOptions::default())?;
            let oracle = common::sampled_max_entropy(&t, 100, split_seed(90, k));
            gap = gap.max(oracle - sol.state.entropy());
            residual = residual.max(trace_distance(&t.apply(&sol.state)?, &sol.state)?);
        }
    }
    outcome(
        gap <= 1e-6 && residual <= 1e-8,
        format!("oracle minus solver entropy at most {gap:.1e}, residual {residual:.1e}"),
    )
}

fn sliding_transport() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for k in 0..50 {
        let (a, b) = if k % 2 == 0 { (2, 3) } else { (3, 2) };
        let f = random_channel(vec![a], vec![b], split_seed(10, 2 * k));
        let g = random_channel(vec![b], vec![a], split_seed(10, 2 * k + 1));
        let tau_gf = solve_max_entropy(&f.then(&g)?, &SolverOptions::default())?.state;
        let tau_fg = solve_max_entropy(&g.then(&f)?, &SolverOptions::default())?.state;
        worst = worst.max(trace_distance(&f.apply(&tau_gf)?, &tau_fg)?);
    }
    outcome(worst <= 1e-7, format!("max transport error {worst:.1e}"))
}

fn cloning() -> Result<Outcome> {
    let dephase = make_gate(&GateSpec::DephaseZ(2))?;
    let mut r = common::rng(11);
    let mut worst = 0.0f64;
    let e = scenarios::cloner_cnot_morphism(3)?;
    for rho in [DensityMatrix::qubit_plus(), random::random_density(&mut r, vec![2])] {
        let dz = dephase.apply(&rho)?;
        let want = dz.tensor(&dz).tensor(&dz);
        worst = worst.max(trace_distance(&dctc_apply(&e, &rho)?, &want)?);
    }
    let rho = DensityMatrix::qubit_plus();
    let fids: Vec<f64> =
        [10, 100, 1000].iter().map(|&n| Ok(scenarios::cloner_sic(n, &rho, 11)?.fidelity)).collect::<Result<_>>()?;
    let increasing = fids.windows(2).all(|w| w[1] > w[0]);
    outcome(
        worst <= 1e-9 && increasing,
        format!("CNOT copies deviation {worst:.1e}, SIC fidelities {:.4} {:.4} {:.4}", fids[0], fids[1], fids[2]),
    )
}

fn mixsym_algebra() -> Result<Outcome> {
    let mut norm_dev = 0.0f64;
    for k in 0..20 {
        let phi = random_channel(vec![2, 2], vec![2, 2], split_seed(12, k));
        let f = mixsym_lift(&pctc_superop(&phi, &[2])?)?;
        let g = mixsym_lift(&random_channel(vec![2], vec![2], split_seed(13, k)))?;
        for m in [f.clone(), mixsym_compose(&f, &g)?, f.tensor(&g)] {
            if !m.is_zero() {
                norm_dev = norm_dev.max((m.normalizer() - 1.0).abs());
            }
        }
    }
    let prep_one = mixsym_lift(&QChannel::prepare(&DensityMatrix::qubit_one()))?;
    let post_zero = mixsym_lift(&QChannel::new(vec![ctc_core::linalg::unit(2, 0, 0)], vec![2], vec![2])?)?;
    let orthogonal_zero = mixsym_compose(&post_zero, &prep_one)?.is_zero();
    let e: ElementaryMorphism = scenarios::grandfather_morphism();
    let on_minus = ctc_core::pctc_apply(e.phi(), e.cv_dims(), &DensityMatrix::qubit_minus())?;
    let on_one = ctc_core::pctc_apply(e.phi(), e.cv_dims(), &DensityMatrix::qubit_one())?;
    let minus_nn = matches!(on_minus, PctcOutcome::NonNormalizable { .. });
    let one_nn = matches!(on_one, PctcOutcome::NonNormalizable { .. });
    outcome(
        norm_dev <= 1e-9 && orthogonal_zero && minus_nn,
        format!(
            "normalization deviation {norm_dev:.1e}, orthogonal composite zero {orthogonal_zero}, \
             grandfather on |-> non-normalizable {minus_nn} (on |1> {one_nn})"
        ),
    )
}

fn causal_sets() -> Result<Outcome> {
    let mut failures = 0;
    for k in 0..100 {
        let c = common::random_poset(split_seed(13, k), 8);
        let back = graph_to_causal_set(&causal_set_to_graph(&c))?;
        if back.relation() != c.relation() {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("{failures} of 100 posets changed"))
}

fn linearity_trap() -> Result<Outcome> {
    let r = scenarios::linearity_trap_report()?;
    outcome(
        r.signalling <= 1e-8 && r.branch_gap > 0.05,
        format!("basis dependence {:.1e}, branch-sum gap {:.3}", r.signalling, r.branch_gap),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, Check); 14] = [
        (1, "grandfather loop outputs I/2", grandfather),
        (2, "entanglement breaking", entanglement_breaking),
        (3, "nonlinearity closed form", nonlinearity),
        (4, "solver discontinuity", discontinuity),
        (5, "discrimination of four states", discrimination),
        (6, "terminality", terminality),
        (7, "axiom suite", axiom_suite),
        (8, "cut invariance", cut_invariance),
        (9, "max-entropy solver against sampled oracle", solver_oracle),
        (10, "sliding fixed-point transport", sliding_transport),
        (11, "cloning", cloning),
        (12, "post-selected algebra", mixsym_algebra),
        (13, "causal-set round trip", causal_sets),
        (14, "linearity trap", linearity_trap),
    ];
    let mut unexpected = 0;
    for (n, name, check) in criteria {
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let known_red = KNOWN_RED.contains(&n);
        let note = match (pass, known_red) {
            (false, true) => " (known red, see the decisions ledger)",
            (true, true) => " (recorded as red but passed)",
            _ => "",
        };
        println!("criterion {n:>2} {}: {name}: {detail}{note}", if pass { "PASS" } else { "FAIL" });
        if pass == known_red {
            unexpected += 1;
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} criteria differ from their recorded status");
        ExitCode::FAILURE
    }
}
