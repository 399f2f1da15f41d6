//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line (run with --nocapture to see them). Tolerances and
//! runtime budgets are pinned in code.

use resmin::linalg;
use resmin::mesh::{Bc, DiscreteFunction, FESpace, Mesh1D};
use resmin::mixed::{assemble_b, assemble_rhs};
use resmin::norm::NormSpec;
use resmin::problems::advection::{
    cell_average_solve, cell_average_study, gibbs_ideal_best_lp, gibbs_overshoot, AdvectionData,
    SourceTerm,
};
use resmin::problems::laplace::{
    graded_instability_study, laplace_convergence_study, LaplaceData, LaplaceExact, LaplaceRhs,
};
use resmin::solve::{estimate_rate, solve_mixed, SolverConfig};
use resmin::verify;
use resmin::{scalar_fn, BilinearForm, Coefficient, MixedProblem, QuadratureRule, RhsSpec};
use std::time::Instant;

const SEED: u64 = 20240;

struct Criterion {
    name: &'static str,
    budget_s: f64,
    start: Instant,
}

impl Criterion {
    fn new(name: &'static str, budget_s: f64) -> Self {
        Criterion {
            name,
            budget_s,
            start: Instant::now(),
        }
    }

    fn finish(self, pass: bool, details: &str) {
        let elapsed = self.start.elapsed().as_secs_f64();
        let within = elapsed <= self.budget_s;
        println!(
            "{} {}: {} [{:.1}s of {:.0}s budget]",
            if pass && within { "PASS" } else { "FAIL" },
            self.name,
            details,
            elapsed,
            self.budget_s
        );
        assert!(pass, "{}: {}", self.name, details);
        assert!(
            within,
            "{}: runtime {elapsed:.1}s exceeded budget {}s",
            self.name, self.budget_s
        );
    }
}

#[test]
fn criterion_01_duality_identity_suite() {
    let c = Criterion::new("criterion 1 (duality identities)", 10.0);
    let results = verify::duality_suite(SEED);
    let pairing = results.iter().find(|r| r.name == "duality.pairing_identity").unwrap();
    let conj = results
        .iter()
        .find(|r| r.name == "duality.conjugate_norm_identity")
        .unwrap();
    let pass = pairing.pass && conj.pass;
    c.finish(pass, &format!("{}; {}", pairing.details, conj.details));
}

#[test]
fn criterion_02_formulation_equivalence() {
    let c = Criterion::new("criterion 2 (formulation equivalence)", 60.0);
    let results = verify::equivalence_suite(SEED);
    let pass = results.iter().all(|r| r.pass);
    let details = results
        .iter()
        .map(|r| r.details.as_str())
        .collect::<Vec<_>>()
        .join("; ");
    c.finish(pass, &details);
}

#[test]
fn criterion_03_petrov_galerkin_collapse() {
    let c = Criterion::new("criterion 3 (Petrov-Galerkin collapse)", 60.0);
    let cfg = SolverConfig::default().without_pg_fast_path();
    let mut worst_r = 0.0f64;
    let mut worst_u = 0.0f64;

    // compatible square pair 1: P^1 x P^1 zero-both for the Laplacian, rho=3
    {
        let mesh = Mesh1D::uniform(0.0, 1.0, 7).unwrap();
        let space = FESpace::continuous_pk(mesh, 1, Bc::ZeroBoth).unwrap();
        let prob = MixedProblem::new(
            space.clone(),
            space,
            BilinearForm::GradGrad,
            RhsSpec::volume_fn(|x| x.exp()),
            NormSpec::lp_derivative(3.0),
            NormSpec::lp_derivative(1.5),
            QuadratureRule::default(),
        )
        .unwrap();
        let sol = solve_mixed(&prob, &cfg).unwrap();
        worst_r = worst_r.max(prob.vnorm.norm(&sol.r_m, &prob.quad));
        // independent linear Petrov-Galerkin solve
        let b = assemble_b(&prob).unwrap();
        let f = assemble_rhs(&prob).unwrap();
        let u_pg = linalg::solve_lu(b, f).unwrap();
        for (a, w) in sol.u_n.coeffs().iter().zip(&u_pg) {
            worst_u = worst_u.max((a - w).abs());
        }
    }
    // compatible square pair 2: P^0 x ideal test space on a nonuniform mesh
    {
        let mesh = Mesh1D::new(vec![0.0, 0.2, 0.35, 0.62, 1.0]).unwrap();
        let jump = 2.0f64.sqrt() / 2.0;
        let data = AdvectionData::new(
            Coefficient::constant(1.0),
            Coefficient::constant(0.0),
            SourceTerm::Dirac(vec![(jump, 2.0)]),
        )
        .with_inflow_left(-1.0);
        let trial = FESpace::p0(mesh.clone());
        let test = resmin::build_ideal_advection_test_space(&mesh, &data.beta).unwrap();
        let prob =
            resmin::problems::advection::advection_weak_problem(&data, trial, test, 1.5).unwrap();
        let sol = solve_mixed(&prob, &cfg).unwrap();
        worst_r = worst_r.max(prob.vnorm.norm(&sol.r_m, &prob.quad));
        let b = assemble_b(&prob).unwrap();
        let f = assemble_rhs(&prob).unwrap();
        let u_pg = linalg::solve_lu(b, f).unwrap();
        for (a, w) in sol.u_n.coeffs().iter().zip(&u_pg) {
            worst_u = worst_u.max((a - w).abs());
        }
    }
    let pass = worst_r <= 1e-9 && worst_u <= 1e-9;
    c.finish(
        pass,
        &format!("max ||r_m||_V = {worst_r:.2e} (<= 1e-9), max |u_n - u_PG| = {worst_u:.2e} (<= 1e-9), Newton path"),
    );
}

#[test]
fn criterion_04_cell_average_identity_and_rates() {
    let c = Criterion::new("criterion 4 (cell averages and advection rates)", 300.0);
    let jump = 2.0f64.sqrt() / 2.0;
    let data = AdvectionData::new(
        Coefficient::constant(1.0),
        Coefficient::constant(0.0),
        SourceTerm::Dirac(vec![(jump, 2.0)]),
    )
    .with_inflow_left(-1.0);
    let cfg = SolverConfig::default();

    // identity: element averages exactly, against analytic element integrals
    let mut worst_avg = 0.0f64;
    for mesh in [
        Mesh1D::new(vec![0.0, 0.5, 1.0]).unwrap(),
        Mesh1D::uniform(0.0, 1.0, 5).unwrap(),
        Mesh1D::new(vec![0.0, 0.3, 0.55, 0.71, 0.9, 1.0]).unwrap(),
    ] {
        let (u, _) = cell_average_solve(&data, &mesh, 1.5, &cfg).unwrap();
        for j in 0..mesh.n_elements() {
            let (a, b) = mesh.element(j);
            // average of sign(x - jump) over [a, b]
            let pos = (b - jump.max(a)).max(0.0);
            let neg = (jump.min(b) - a).max(0.0);
            let avg = (pos - neg) / (b - a);
            worst_avg = worst_avg.max((u.coeffs()[j] - avg).abs());
        }
    }

    // rate sweep over n = 2 .. 8192 for p in {1 (run at 1+1e-3), 1.5, 2}.
    // Log-spaced at three points per octave: the error constant oscillates
    // with the position of the jump inside its element, and the dyadic
    // orbit of sqrt(2)/2 under the doubling map correlates that position
    // with n (a pure-arithmetic fit of the exact element averages over
    // dyadic n gives 1.076 at p = 1); the denser sweep decorrelates the
    // alignment and fits the true h^{1/p} rate.
    let exact = scalar_fn(move |x| if x >= jump { 1.0 } else { -1.0 });
    let ns: Vec<usize> = {
        let mut v: Vec<usize> = (3..=39)
            .map(|k| (2.0f64.powf(k as f64 / 3.0)).round() as usize)
            .collect();
        v.dedup();
        v
    };
    assert_eq!(*ns.first().unwrap(), 2);
    assert_eq!(*ns.last().unwrap(), 8192);
    let p_list = [1.0, 1.5, 2.0];
    let rows = cell_average_study(&data, &exact, &[jump], (0.0, 1.0), &p_list, &ns, &cfg).unwrap();
    let mut rate_msgs = Vec::new();
    let mut rates_ok = true;
    for &p in &p_list {
        let sel: Vec<_> = rows.iter().filter(|r| r.p == p).collect();
        let h: Vec<f64> = sel.iter().map(|r| r.h).collect();
        let e: Vec<f64> = sel.iter().map(|r| r.lp_error).collect();
        let fit = estimate_rate(&h, &e).unwrap();
        let ok = (fit.rate - 1.0 / p).abs() <= 0.07;
        rates_ok &= ok;
        rate_msgs.push(format!("p={p}: rate {:.4} vs 1/p = {:.4}", fit.rate, 1.0 / p));
    }
    let pass = worst_avg <= 1e-9 && rates_ok;
    c.finish(
        pass,
        &format!("max |u_n - analytic average| = {worst_avg:.2e} (<= 1e-9); {}", rate_msgs.join(", ")),
    );
}

#[test]
fn criterion_05_gibbs_suppression() {
    let c = Criterion::new("criterion 5 (Gibbs suppression)", 300.0);
    // ideal-limit overshoots via the direct best-L^p-approximation oracle
    let ps = [2.0, 1.5, 1.25, 1.125];
    let mut overshoots = Vec::new();
    for &p in &ps {
        let ideal = gibbs_ideal_best_lp(p, 6, 16).unwrap();
        overshoots.push(gibbs_overshoot(&ideal));
    }
    let o101 = gibbs_overshoot(&gibbs_ideal_best_lp(1.01, 6, 16).unwrap());
    let decreasing = overshoots.windows(2).all(|w| w[1] < w[0]);
    let suppressed = o101 < 0.1 * overshoots[0];
    let pass = decreasing && suppressed;
    c.finish(
        pass,
        &format!(
            "overshoot at p={ps:?}: {:?}; p=1.01: {o101:.5} < 0.1 x {:.5}",
            overshoots
                .iter()
                .map(|o| format!("{o:.5}"))
                .collect::<Vec<_>>(),
            overshoots[0]
        ),
    );
}

#[test]
fn criterion_06_laplace_smooth_rates() {
    let c = Criterion::new("criterion 6 (Laplace smooth rates)", 600.0);
    let data = LaplaceData::new(1.5, LaplaceRhs::Smooth(scalar_fn(|x| x.exp()))).unwrap();
    let exact = LaplaceExact::smooth_exp();
    let ns = [2usize, 4, 8, 16, 32, 64];
    let cfg = SolverConfig::default();
    let mut msgs = Vec::new();
    let mut pass = true;
    for k in [1usize, 2, 3] {
        let study = laplace_convergence_study(&data, &exact, k, k + 1, &ns, &cfg).unwrap();
        let rate_ok = (study.rate_energy.rate - k as f64).abs() <= 0.1;
        let tracking_ok = study
            .rows
            .iter()
            .all(|r| r.r_energy <= 3.0 * r.energy_error && r.energy_error <= 3.0 * r.r_energy);
        pass &= rate_ok && tracking_ok;
        msgs.push(format!(
            "k={k}: energy rate {:.4} (want {k} +- 0.1), residual within 3x at all levels: {tracking_ok}",
            study.rate_energy.rate
        ));
    }
    c.finish(pass, &msgs.join("; "));
}

#[test]
fn criterion_07_laplace_rough_rates() {
    let c = Criterion::new("criterion 7 (Laplace rough rates)", 600.0);
    let p = 1.25;
    let ns = [2usize, 4, 8, 16, 32, 64];
    let cfg = SolverConfig::default();
    let mut msgs = Vec::new();
    let mut pass = true;
    for alpha in [0.25, 0.375, 0.5] {
        let data = LaplaceData::new(p, LaplaceRhs::ManufacturedPower { alpha }).unwrap();
        let exact = LaplaceExact::power(alpha);
        let study = laplace_convergence_study(&data, &exact, 1, 2, &ns, &cfg).unwrap();
        let want = 1.0 / p - 1.0 + alpha;
        let ok = (study.rate_energy.rate - want).abs() <= 0.05;
        pass &= ok;
        msgs.push(format!(
            "alpha={alpha}: energy rate {:.4} (want {want:.3} +- 0.05)",
            study.rate_energy.rate
        ));
    }
    // alpha = 2/5: the weaker L^p norm converges at ~6/5
    {
        let alpha = 0.4;
        let data = LaplaceData::new(p, LaplaceRhs::ManufacturedPower { alpha }).unwrap();
        let exact = LaplaceExact::power(alpha);
        let study = laplace_convergence_study(&data, &exact, 1, 2, &ns, &cfg).unwrap();
        let ok = (study.rate_lp.rate - 1.2).abs() <= 0.15;
        pass &= ok;
        msgs.push(format!(
            "alpha=0.4: L^p rate {:.4} (want 1.2 +- 0.15), energy rate {:.4}",
            study.rate_lp.rate, study.rate_energy.rate
        ));
    }
    c.finish(pass, &msgs.join("; "));
}

#[test]
fn criterion_08_graded_mesh_study() {
    let c = Criterion::new("criterion 8 (graded-mesh study)", 120.0);
    let epsilons: Vec<f64> = (0..16).map(|k| 0.5 * 10f64.powi(-k)).collect();
    let study = graded_instability_study(&epsilons, 1.25, 0.25, &SolverConfig::default()).unwrap();
    let galerkin: Vec<f64> = study.rows.iter().map(|r| r.galerkin).collect();
    let increasing = galerkin.windows(2).all(|w| w[1] > w[0]);
    let ratio = galerkin.last().unwrap() / galerkin.first().unwrap();
    let last4 = &study.rows[study.rows.len() - 4..];
    let var = |vals: Vec<f64>| -> f64 {
        let lo = vals.iter().cloned().fold(f64::MAX, f64::min);
        let hi = vals.iter().cloned().fold(f64::MIN, f64::max);
        (hi - lo) / lo
    };
    let ideal_var = var(last4.iter().map(|r| r.ideal).collect());
    let inexact_var = var(last4.iter().map(|r| r.inexact).collect());
    let oracle_ok = study.rows.iter().all(|r| {
        (r.ideal - r.oracle_ideal).abs() <= 0.01 * r.oracle_ideal
            && (r.inexact - r.oracle_inexact).abs() <= 0.01 * r.oracle_inexact
    });
    let pass =
        increasing && ratio > 5.0 && ideal_var < 0.10 && inexact_var < 0.10 && oracle_ok;
    c.finish(
        pass,
        &format!(
            "Galerkin strictly increasing: {increasing}, final/initial = {ratio:.2} (> 5); last-4 variation ideal {ideal_var:.4}, inexact {inexact_var:.4} (< 0.10); golden-section oracles within 1%: {oracle_ok}"
        ),
    );
}

#[test]
fn criterion_09_best_approximation_bounds() {
    let c = Criterion::new("criterion 9 (best-approximation bounds)", 60.0);
    let results = verify::bestapprox_suite(SEED);
    let pass = results.iter().all(|r| r.pass);
    let details = results
        .iter()
        .map(|r| format!("{}: {}", r.name, if r.pass { "ok" } else { r.details.as_str() }))
        .collect::<Vec<_>>()
        .join("; ");
    c.finish(pass, &details);
}

#[test]
fn criterion_10_infsup_diagnostic() {
    let c = Criterion::new("criterion 10 (inf-sup diagnostic)", 120.0);
    let results = verify::infsup_suite(SEED);
    let decay = results.iter().find(|r| r.name == "infsup.square_pair_decays").unwrap();
    let floored = results
        .iter()
        .find(|r| r.name == "infsup.enriched_pair_floored")
        .unwrap();
    let pass = decay.pass && floored.pass;
    c.finish(pass, &format!("{}; {}", decay.details, floored.details));
}

// Cross-cutting check used by the studies: a DiscreteFunction round-trips
// its own element averages (guards the error quadrature of criterion 4).
#[test]
fn sanity_error_quadrature_resolves_jump() {
    let jump = 2.0f64.sqrt() / 2.0;
    let mesh = Mesh1D::uniform(0.0, 1.0, 4).unwrap();
    let space = FESpace::p0(mesh.clone());
    let u = DiscreteFunction::new(space, vec![-1.0, -1.0, 1.0, 1.0]).unwrap();
    let err_mesh = mesh.insert_points(&[jump]);
    let quad = QuadratureRule::default();
    let exact = move |x: f64| if x >= jump { 1.0 } else { -1.0 };
    let e = resmin::lp_norm(&mut |x| exact(x) - u.eval(x), &err_mesh, 2.0, &quad).unwrap();
    // exact: |u - u_n| = 2 on (0.5, jump), so the L^2 error is 2 sqrt(jump - 0.5)
    let want = 2.0 * (jump - 0.5f64).sqrt();
    assert!((e - want).abs() < 1e-12, "{e} vs {want}");
}
