//! Acceptance run: one line per criterion.
//!
//! Every instance is drawn from a fixed ChaCha8 seed, so reruns are
//! reproducible. Failures are reported on stdout; set `ACCEPTANCE_STRICT=1`
//! to also turn them into a nonzero exit.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nzdd_core::build::{build_zdd, contractible_nodes, reduce, ElementOrder};
use nzdd_core::erlpboost::{self, iteration_bound, relative_entropy, ErlpOptions};
use nzdd_core::extform::{compress_binary, extend_integer, feasible_extended, IntMode};
use nzdd_core::lp::{solve_lp, LpStatus};
use nzdd_core::nzdd::{EdgeId, DEFAULT_PATH_CAP, ROOT};
use nzdd_core::smooth::{edge_marginals, grad_theta, margin_value, theta};
use nzdd_core::softmargin::{column_generation, solve_extended, solve_original_softmargin, SampleNzdd};
use nzdd_core::{gen_mip, gen_rofk, ConstraintSystem, Direction, Row, Sample, Sense, SubsetFamily, VarKind};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, u64, Box<dyn Fn() -> Outcome + 'a>);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)*) => {
        if !$cond {
            return Err(format!($($fmt)*));
        }
    };
}

fn grid(n: usize, levels: &[f64]) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![]];
    for _ in 0..n {
        pts = pts
            .into_iter()
            .flat_map(|p| {
                levels.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    pts
}

fn binary_system(rng: &mut ChaCha8Rng, n: usize, m: usize, kind: VarKind) -> ConstraintSystem {
    let mut s = ConstraintSystem::new(0);
    for _ in 0..n {
        s.add_var(kind, 0.0, 1.0);
    }
    let density = rng.gen_range(0.2..0.8);
    for _ in 0..m {
        let coeffs: Vec<(usize, f64)> = (0..n).filter(|_| rng.gen_bool(density)).map(|j| (j, 1.0)).collect();
        let rhs = if !coeffs.is_empty() && rng.gen_bool(0.8) { 1.0 } else { 0.0 };
        s.add_row(Row::ge(coeffs, rhs));
    }
    s
}

fn int_system(rng: &mut ChaCha8Rng, n: usize, m: usize) -> ConstraintSystem {
    let mut s = ConstraintSystem::new(0);
    for _ in 0..n {
        s.add_var(VarKind::Integer, 0.0, 3.0);
    }
    for _ in 0..m {
        let coeffs = (0..n).map(|j| (j, f64::from(rng.gen_range(0..=3u8)))).collect();
        let sense = [Sense::Ge, Sense::Ge, Sense::Le, Sense::Eq][rng.gen_range(0..4)];
        s.add_row(Row::new(coeffs, sense, f64::from(rng.gen_range(0..=9u8))));
    }
    s
}

/// Noisy linear threshold labels over sparse random instances.
fn random_sample(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Sample {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let p = rng.gen_range(0.2..0.6);
    let mut instances = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for _ in 0..m {
        let x: Vec<u32> = (0..n as u32).filter(|_| rng.gen_bool(p)).collect();
        let score = x.iter().map(|&j| w[j as usize]).sum::<f64>() + rng.gen_range(-0.4..0.4);
        labels.push(if score >= 0.0 { 1 } else { -1 });
        instances.push(x);
    }
    Sample::new(n, instances, labels).unwrap()
}

/// The 30 soft margin samples shared by criteria 6 to 8, each paired with
/// every `nu`.
fn margin_instances() -> Vec<(Sample, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let mut out = Vec::new();
    for _ in 0..30 {
        let n = rng.gen_range(1..=10);
        let m = rng.gen_range(2..=100);
        let sample = random_sample(&mut rng, n, m);
        for nu in [0.2, 0.5, 1.0] {
            out.push((sample.clone(), nu));
        }
    }
    out
}

fn sn_of(sample: &Sample) -> SampleNzdd {
    SampleNzdd::build(sample, &ElementOrder::Frequency).unwrap()
}

fn c1_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut points = 0usize;
    for k in 0..200 {
        let n = rng.gen_range(1..=8);
        let m = rng.gen_range(1..=20);
        let sys = binary_system(&mut rng, n, m, VarKind::Binary);
        let (ext, _) = compress_binary(&sys, &ElementOrder::Frequency).map_err(|e| e.to_string())?;
        for x in grid(n, &[0.0, 1.0]) {
            let direct = sys.rows_satisfied(&x, 0.0);
            ensure!(feasible_extended(&ext, &x) == direct, "system {k}, x = {x:?}: direct {direct}");
            points += 1;
        }
    }
    Ok(format!("200 systems, {points} points agree"))
}

fn c2_size_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut systems: Vec<ConstraintSystem> = (0..200)
        .map(|_| {
            let n = rng.gen_range(1..=8);
            let m = rng.gen_range(1..=20);
            binary_system(&mut rng, n, m, VarKind::Binary)
        })
        .collect();
    for seed in 0..20 {
        systems.push(gen_mip(25, 10, 12, 200, seed).unwrap());
    }
    let mut shrunk = 0;
    for (k, sys) in systems.iter().enumerate() {
        let (ext, stats) = compress_binary(sys, &ElementOrder::Frequency).map_err(|e| e.to_string())?;
        ensure!(ext.system.num_rows() == stats.num_edges, "system {k}: {} rows, {} edges", ext.system.num_rows(), stats.num_edges);
        let added = &ext.system.vars[sys.num_vars()..];
        ensure!(added.len() == stats.num_nodes - 2, "system {k}: {} new vars, {} nodes", added.len(), stats.num_nodes);
        ensure!(
            added.iter().all(|v| v.kind == VarKind::Real && v.lo == f64::NEG_INFINITY && v.hi == f64::INFINITY),
            "system {k}: added variable is not free"
        );
        if ext.system.num_rows() < sys.num_rows() {
            shrunk += 1;
        }
    }
    Ok(format!("{} systems, {shrunk} with fewer rows", systems.len()))
}

fn lp_value(sys: &ConstraintSystem) -> Result<(LpStatus, f64), String> {
    let sol = solve_lp(sys).map_err(|e| e.to_string())?;
    Ok((sol.status, sol.value))
}

fn c3_lp_values() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut infeasible = 0;
    for k in 0..50 {
        let n = rng.gen_range(1..=6);
        let m = rng.gen_range(1..=12);
        let mut sys = if k % 2 == 0 {
            binary_system(&mut rng, n, m, VarKind::Real)
        } else {
            let mut s = int_system(&mut rng, n, m.min(8));
            for v in &mut s.vars {
                v.kind = VarKind::Real;
            }
            // Random equalities are mostly infeasible together.
            for r in &mut s.rows {
                if r.sense == Sense::Eq {
                    r.sense = Sense::Ge;
                }
            }
            s
        };
        let dir = if rng.gen_bool(0.5) { Direction::Min } else { Direction::Max };
        sys.set_objective(dir, (0..n).map(|j| (j, rng.gen_range(-5.0..5.0))).collect());
        let ext = if k % 2 == 0 {
            compress_binary(&sys, &ElementOrder::Frequency).map(|r| r.0)
        } else {
            extend_integer(&sys, IntMode::Sigma, &ElementOrder::Frequency).map(|r| r.0)
        }
        .map_err(|e| e.to_string())?;
        let (s0, v0) = lp_value(&sys)?;
        let (s1, v1) = lp_value(&ext.system)?;
        ensure!(s0 == s1, "system {k}: status {s0:?} vs {s1:?}");
        match s0 {
            LpStatus::Optimal => {
                ensure!((v0 - v1).abs() <= 1e-7, "system {k}: {v0} vs {v1}");
                worst = worst.max((v0 - v1).abs());
            }
            LpStatus::Infeasible => infeasible += 1,
            other => return Err(format!("system {k}: unexpected status {other:?}")),
        }
    }
    Ok(format!("50 LPs ({infeasible} infeasible), max |diff| {worst:.1e}"))
}

fn c4_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut removed = 0usize;
    for k in 0..100 {
        let ground = rng.gen_range(1..=10);
        let count = rng.gen_range(1..=100);
        let p = rng.gen_range(0.1..0.9);
        let sets = (0..count)
            .map(|_| (0..ground as u32).filter(|_| rng.gen_bool(p)).collect())
            .collect();
        let (family, _) = SubsetFamily::new_dedup(ground, sets).map_err(|e| e.to_string())?;
        let zdd = build_zdd(&family, &ElementOrder::Frequency).map_err(|e| e.to_string())?;
        let g = reduce(&zdd);
        let lang = g.language(DEFAULT_PATH_CAP).map_err(|e| e.to_string())?;
        ensure!(lang.sets() == family.sets(), "family {k}: language changed");
        ensure!(g.validate(DEFAULT_PATH_CAP).is_ok(), "family {k}: invalid diagram");
        let left = contractible_nodes(&g);
        ensure!(left.is_empty(), "family {k}: contractible nodes {left:?} remain");
        ensure!(
            g.node_count() <= zdd.node_count() && g.num_edges() <= zdd.num_edges(),
            "family {k}: grew from {}/{} to {}/{}",
            zdd.node_count(),
            zdd.num_edges(),
            g.node_count(),
            g.num_edges()
        );
        removed += zdd.num_edges() - g.num_edges();
    }
    Ok(format!("100 families, {removed} edges removed in total"))
}

fn c5_rofk() -> Outcome {
    let mut report = Vec::new();
    let mut ratio = f64::NAN;
    for m in [1_000, 3_000, 10_000, 30_000, 100_000] {
        let sample = gen_rofk(20, 10, 5, m, 0).map_err(|e| e.to_string())?;
        let sn = sn_of(&sample);
        ratio = sn.num_edges() as f64 / sample.total_size() as f64;
        report.push(format!("m={m}: |E|={} ({ratio:.4})", sn.num_edges()));
    }
    let last = gen_rofk(20, 10, 5, 100_000, 0).map_err(|e| e.to_string())?;
    let natural = SampleNzdd::build(&last, &ElementOrder::Natural).map_err(|e| e.to_string())?;
    report.push(format!(
        "natural order at m=100000: |E|={} ({:.4})",
        natural.num_edges(),
        natural.num_edges() as f64 / last.total_size() as f64
    ));
    ensure!(ratio < 0.05, "final ratio {ratio:.4}; {}", report.join(", "));
    Ok(report.join(", "))
}

fn c6_softmargin(instances: &[(Sample, f64)]) -> Outcome {
    let mut worst_violation: f64 = 0.0;
    let mut worst_gap = f64::NEG_INFINITY;
    for (k, (sample, nu)) in instances.iter().enumerate() {
        let sn = sn_of(sample);
        let ext = solve_extended(&sn, *nu).map_err(|e| format!("instance {k}: {e}"))?;
        let mapped = ext.to_original(&sn, sample, *nu).map_err(|e| e.to_string())?;
        let orig = solve_original_softmargin(sample, *nu).map_err(|e| e.to_string())?;
        let v = mapped.violation(sample);
        ensure!(v <= 1e-7, "instance {k}: mapped solution violates by {v:.3e}");
        ensure!(
            (mapped.value - ext.objective).abs() <= 1e-7,
            "instance {k}: mapped value {} differs from {}",
            mapped.value,
            ext.objective
        );
        ensure!(ext.objective <= orig.value + 1e-7, "instance {k}: extended {} > original {}", ext.objective, orig.value);
        worst_violation = worst_violation.max(v);
        worst_gap = worst_gap.max(ext.objective - orig.value);
    }
    Ok(format!("max violation {worst_violation:.1e}, max ext - orig {worst_gap:.1e}"))
}

fn c7_column_generation(instances: &[(Sample, f64)]) -> Outcome {
    let eps = 1e-4;
    let mut worst: f64 = 0.0;
    let mut rounds = 0;
    for (k, (sample, nu)) in instances.iter().enumerate() {
        let sn = sn_of(sample);
        let opt = solve_extended(&sn, *nu).map_err(|e| e.to_string())?.objective;
        let cg = column_generation(&sn, *nu, eps).map_err(|e| format!("instance {k}: {e}"))?;
        let gap = (cg.solution.objective - opt).abs();
        ensure!(gap <= eps, "instance {k}: cg {} vs LP {opt}", cg.solution.objective);
        worst = worst.max(gap);
        rounds = rounds.max(cg.iterations);
    }
    Ok(format!("max |cg - LP| {worst:.1e}, at most {rounds} rounds"))
}

fn c8_erlpboost(instances: &[(Sample, f64)]) -> Outcome {
    let eps = 0.05;
    let mut worst_ratio: f64 = 0.0;
    let mut max_t = 0;
    let mut iterates = 0;
    for (k, (sample, nu)) in instances.iter().enumerate() {
        let sn = sn_of(sample);
        let nu = *nu;
        let opt = solve_extended(&sn, nu).map_err(|e| e.to_string())?.objective;
        let res = erlpboost::run(&sn, nu, eps, &ErlpOptions::default()).map_err(|e| format!("instance {k}: {e}"))?;
        ensure!(
            res.solution.objective >= opt - eps,
            "instance {k}: value {} below LP {opt} - eps",
            res.solution.objective
        );
        let bound = iteration_bound(sn.depth(), nu, eps);
        ensure!((res.iterations as f64) <= bound, "instance {k}: T = {} > {bound}", res.iterations);
        worst_ratio = worst_ratio.max(res.iterations as f64 / bound);
        max_t = max_t.max(res.iterations);

        // Recompute every iterate from its hypothesis prefix and check it
        // directly.
        let depth = sn.depth() as f64;
        let ent_bound = depth * (1.0 / nu).ln();
        let d0 = sn.initial_flow();
        let tol = (eps / 100.0).min(1e-6);
        for (t, rec) in res.records.iter().enumerate() {
            let sub = erlpboost::solve_subproblem(&sn, nu, &res.hypotheses[..=t], res.eta, tol, 100_000)
                .map_err(|e| format!("instance {k} round {}: {e}", t + 1))?;
            let viol = sn.flow_violation(&sub.d, nu);
            ensure!(viol <= 1e-8, "instance {k} round {}: flow violation {viol:.2e}", t + 1);
            let ent = relative_entropy(&sub.d, &d0);
            ensure!(ent <= ent_bound + 1e-9, "instance {k} round {}: entropy {ent} > {ent_bound}", t + 1);
            let total: f64 = sub.d.iter().sum();
            // Conservation holds to 1e-8 per node, so the sum may drift by
            // that much per edge.
            ensure!(total <= depth + 1e-8 * sn.num_edges() as f64, "instance {k} round {}: total flow {total} above depth {depth}, nu {nu}, eta {}", t + 1, res.eta);
            ensure!(
                (sub.objective - rec.objective).abs() <= 1e-9 * (1.0 + rec.objective.abs()),
                "instance {k} round {}: iterate not reproducible",
                t + 1
            );
            iterates += 1;
        }
    }
    Ok(format!("max T {max_t}, max T/bound {worst_ratio:.1e}, {iterates} iterates checked"))
}

fn random_point(sn: &SampleNzdd, rng: &mut ChaCha8Rng, spread: f64) -> (Vec<f64>, Vec<f64>) {
    let w = (0..=sn.n).map(|_| rng.gen_range(-spread..spread)).collect();
    let beta = (0..sn.num_edges()).map(|_| rng.gen_range(0.0..spread)).collect();
    (w, beta)
}

fn c9_theta() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let samples: Vec<SampleNzdd> = (0..50)
        .map(|_| {
            let n = rng.gen_range(1..=8);
            let m = rng.gen_range(2..=60);
            sn_of(&random_sample(&mut rng, n, m))
        })
        .collect();

    for k in 0..10_000 {
        let sn = &samples[k % samples.len()];
        let eta = 10f64.powf(rng.gen_range(-1.5..2.5));
        let nu = rng.gen_range(0.05..=1.0);
        let (w, beta) = random_point(sn, &mut rng, 2.0);
        let f = margin_value(sn, &w, &beta, nu).map_err(|e| e.to_string())?;
        let t = theta(sn, &w, &beta, eta, nu).map_err(|e| e.to_string())?;
        let slack = 1e-12 * (1.0 + f.abs());
        let width = (sn.m as f64).ln() / eta;
        ensure!(f <= t + slack && t <= f + width + slack, "point {k}: F {f}, Theta {t}, width {width}");
    }

    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for (k, sn) in samples.iter().enumerate() {
        let eta = rng.gen_range(0.1..20.0);
        let nu = rng.gen_range(0.1..=1.0);
        let (w, beta) = random_point(sn, &mut rng, 1.0);
        let (gw, gb) = grad_theta(sn, &w, &beta, eta, nu).map_err(|e| e.to_string())?;
        let at = |w: &[f64], b: &[f64]| theta(sn, w, b, eta, nu).unwrap();
        let mut check = |fd: f64, g: f64, what: String| -> Result<(), String> {
            let err = (fd - g).abs() / g.abs().max(1.0);
            worst = worst.max(err);
            ensure!(err <= 1e-5, "point {k} {what}: fd {fd} vs {g}");
            Ok(())
        };
        for j in 0..w.len() {
            let (mut a, mut b) = (w.clone(), w.clone());
            a[j] += h;
            b[j] -= h;
            check((at(&a, &beta) - at(&b, &beta)) / (2.0 * h), gw[j], format!("w{j}"))?;
        }
        for e in 0..beta.len() {
            let (mut a, mut b) = (beta.clone(), beta.clone());
            a[e] += h;
            b[e] -= h;
            check((at(&w, &a) - at(&w, &b)) / (2.0 * h), gb[e], format!("beta{e}"))?;
        }
    }

    let mut small = 0;
    let mut tries = 0;
    while small < 100 {
        tries += 1;
        ensure!(tries < 100_000, "too few small diagrams");
        let n = rng.gen_range(1..=4);
        let m = rng.gen_range(2..=8);
        let sn = sn_of(&random_sample(&mut rng, n, m));
        if sn.g.num_paths() > 12 {
            continue;
        }
        small += 1;
        let eta = rng.gen_range(0.1..20.0);
        let (w, beta) = random_point(&sn, &mut rng, 1.0);
        let len = sn.edge_weights(&w);
        let paths: Vec<Vec<EdgeId>> = sn.g.paths(12).map_err(|e| e.to_string())?;
        let raw: Vec<f64> = paths
            .iter()
            .map(|p| p.iter().map(|&e| sn.omega[e] * (-eta * (len[e] + beta[e])).exp()).product())
            .collect();
        let z: f64 = raw.iter().sum();
        let total: f64 = raw.iter().map(|r| r / z).sum();
        ensure!((total - 1.0).abs() <= 1e-10, "enumerated q sums to {total}");
        let mut by_edge = vec![0.0; sn.num_edges()];
        for (p, r) in paths.iter().zip(&raw) {
            for &e in p {
                by_edge[e] += r / z;
            }
        }
        let q = edge_marginals(&sn, &w, &beta, eta).map_err(|e| e.to_string())?;
        let out: f64 = sn.g.out_edges(ROOT).iter().map(|&e| q[e]).sum();
        ensure!((out - 1.0).abs() <= 1e-10, "DP q sums to {out}");
        for (e, (a, b)) in q.iter().zip(&by_edge).enumerate() {
            ensure!((a - b).abs() <= 1e-10, "edge {e}: DP {a} vs enumeration {b}");
        }
    }
    Ok(format!("10000 sandwich points, fd max rel err {worst:.1e}, {small} diagrams normalized"))
}

fn c10_integer() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut points = 0usize;
    for k in 0..50 {
        let n = rng.gen_range(1..=5);
        let m = rng.gen_range(1..=10);
        let sys = int_system(&mut rng, n, m);
        let pts = grid(n, &[0.0, 1.0, 2.0, 3.0]);
        for mode in [IntMode::BinaryEncoding, IntMode::Sigma] {
            let (ext, stats) = extend_integer(&sys, mode, &ElementOrder::Frequency).map_err(|e| e.to_string())?;
            ensure!(
                ext.system.num_rows() == stats.num_edges + ext.aux_rows,
                "system {k} {mode:?}: row count"
            );
            for x in &pts {
                let direct = sys.rows_satisfied(x, 0.0);
                ensure!(feasible_extended(&ext, x) == direct, "system {k} {mode:?}, x = {x:?}: direct {direct}");
                ensure!(
                    ext.system.is_feasible(&ext.complete(x), 1e-9) == direct,
                    "system {k} {mode:?}, x = {x:?}: completion disagrees"
                );
                points += 1;
            }
        }
    }
    Ok(format!("50 systems, {points} checks in both modes"))
}

fn main() -> ExitCode {
    let instances = margin_instances();
    let criteria: Vec<Criterion> = vec![
        ("1 binary extension equivalence", 10, Box::new(c1_equivalence)),
        ("2 extended size law", 10, Box::new(c2_size_law)),
        ("3 LP value equivalence", 30, Box::new(c3_lp_values)),
        ("4 reduction soundness", 10, Box::new(c4_reduction)),
        ("5 r-of-k compressibility", 120, Box::new(c5_rofk)),
        ("6 soft margin compression", 60, Box::new(|| c6_softmargin(&instances))),
        ("7 column generation", 120, Box::new(|| c7_column_generation(&instances))),
        ("8 erlpboost", 300, Box::new(|| c8_erlpboost(&instances))),
        ("9 smoothed objective", 60, Box::new(c9_theta)),
        ("10 integer extensions", 30, Box::new(c10_integer)),
    ];
    let mut failed = 0;
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(msg) if took > Duration::from_secs(limit) => Err(format!("took longer than {limit}s; {msg}")),
            o => o,
        };
        match outcome {
            Ok(msg) => println!("PASS  {name:<32} {:>8.2}s  {msg}", took.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name:<32} {:>8.2}s  {msg}", took.as_secs_f64());
            }
        }
    }
    if failed == 0 {
        println!("all criteria passed");
        return ExitCode::SUCCESS;
    }
    println!("{failed} of 10 criteria failed");
    if std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
