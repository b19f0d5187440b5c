//! End-to-end acceptance run: one line per criterion, nonzero exit if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use common::{c, curve_corpus, elliptic_half_periods, gram_2d, real_desc, reduce_tau};
use hodgelab_cli::config::{self, ExperimentConfig, Kind};
use hodgelab_cli::report::{RunReport, Verdict};
use hodgelab_cli::runner::{self, RunContext};
use hodgelab_core::exact::Rational;
use hodgelab_core::linalg::{self, max_abs, CMat};
use hodgelab_core::periods::{compute_period_data, HyperellipticCurve};
use hodgelab_core::torus::{self, Testbed, TorusTwistedConfig};
use hodgelab_core::{noether, Complex64, Execution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn shipped() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(configs_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    v.sort();
    v
}

fn shipped_of(kinds: &[Kind]) -> Vec<(PathBuf, ExperimentConfig)> {
    shipped()
        .into_iter()
        .filter_map(|p| config::load(&p).ok().map(|l| (p, l.config)))
        .filter(|(_, c)| kinds.contains(&c.kind))
        .collect()
}

fn run(name: &str) -> Result<(RunReport, Duration), String> {
    let loaded = config::load(&configs_dir().join(name)).map_err(|e| e.to_string())?;
    run_cfg(&loaded.config, &loaded.hash)
}

fn run_cfg(cfg: &ExperimentConfig, hash: &str) -> Result<(RunReport, Duration), String> {
    let start = Instant::now();
    let out = runner::run_config(cfg, hash, &RunContext::default()).map_err(|e| e.to_string())?;
    Ok((out.report, start.elapsed()))
}

fn metric(r: &RunReport, key: &str) -> Result<f64, String> {
    r.metrics.get(key).copied().ok_or_else(|| format!("{} report lacks metric {key}", r.kind))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    for g in 2..=8 {
        let (rank, coker) = noether::sym2_multiplication_rank(g).map_err(|e| e.to_string())?;
        let common = noether::common_kernel_dim(g).map_err(|e| e.to_string())?;
        ensure(rank == 2 * g - 1 && coker == g - 2 && common == g - 2, || {
            format!("g = {g}: rank {rank}, cokernel {coker}, common kernel {common}")
        })?;
        ensure((common == 0) == (g == 2), || format!("g = {g}: dichotomy broken"))?;
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(1), || format!("took {t:?}"))?;
    Ok(format!("g = 2..8 exact, {:.0} ms", t.as_secs_f64() * 1e3))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    for g in 2..=6 {
        let bound = 2 * g - 3;
        let mut tested = 0;
        while tested < 100 {
            let u: Vec<Rational> = noether::random_u(g, &mut rng);
            if u.iter().all(is_zero) {
                continue;
            }
            let k = noether::mult_by_u_kernel(g, &u).map_err(|e| e.to_string())?;
            ensure(k >= bound && k > 0, || format!("g = {g}: kernel {k} below {bound}"))?;
            tested += 1;
        }
        checked += tested;
    }
    Ok(format!("{checked} random sections, every kernel >= 2g-3"))
}

fn is_zero(x: &Rational) -> bool {
    <Rational as hodgelab_core::exact::Field>::is_zero(x)
}

fn criterion_3() -> Outcome {
    let (r, _) = run("periods_corpus.toml")?;
    ensure(r.verdict == Verdict::Pass, || format!("periods report: {:?}", r.message))?;
    let genera: Vec<u64> = r.details["curves"]
        .as_object()
        .ok_or("missing curves")?
        .values()
        .filter_map(|v| v["genus"].as_u64())
        .collect();
    ensure([1, 2, 3].iter().all(|g| genera.contains(g)), || format!("corpus genera {genera:?}"))?;
    let worst = r.metrics.iter().filter(|(k, _)| k.ends_with(".riemann_rel")).map(|(_, v)| *v).fold(0.0, f64::max);

    let curve = HyperellipticCurve::new(real_desc(&[1.0, 0.0, -1.0, 0.0])).map_err(|e| e.to_string())?;
    let pd = compute_period_data(&curve, 128, Execution::Parallel).map_err(|e| e.to_string())?;
    let tau = reduce_tau(pd.pi[(0, 1)] / pd.pi[(0, 0)]);
    let (w1, w2) = elliptic_half_periods(-1.0, 0.0, 1.0);
    let oracle = reduce_tau(c(0.0, w2 / w1));
    let tau_err = (tau - oracle).norm().max((oracle - c(0.0, 1.0)).norm());
    ensure(tau_err <= 1e-10, || format!("tau = {tau}, oracle {oracle}"))?;

    let mut gram_err: f64 = 0.0;
    for (name, f) in curve_corpus() {
        let curve = HyperellipticCurve::new(f.clone()).map_err(|e| e.to_string())?;
        if curve.genus() > 2 {
            continue;
        }
        let pd = compute_period_data(&curve, 128, Execution::Parallel).map_err(|e| e.to_string())?;
        let brute = gram_2d(&f, curve.roots(), curve.genus(), 400, 512);
        let rel = max_abs(&(&pd.gram - &brute)) / max_abs(&brute);
        ensure(rel <= 1e-6, || format!("{name}: Gram off by {rel:e}"))?;
        gram_err = gram_err.max(rel);
    }
    Ok(format!("Riemann rel <= {worst:.1e}, |tau - i| {tau_err:.1e}, Gram vs 2-D quadrature {gram_err:.1e}"))
}

fn criterion_4() -> Outcome {
    let (r, t) = run("thm11_corpus.toml")?;
    ensure(r.verdict == Verdict::Pass, || format!("thm11 report: {:?}", r.message))?;
    let families = r.details["families"].as_object().ok_or("missing families")?;
    let mut positive = 0;
    let mut worst: f64 = 0.0;
    let mut contraction = f64::INFINITY;
    for (id, list) in families {
        let list = list.as_array().ok_or("bad family entry")?;
        let mut any_positive = false;
        for e in list {
            let (theta, ks, scale) = (f(e, "theta_uu")?, f(e, "ks_norm2")?, f(e, "scale")?);
            let vanishing = theta.abs().max(ks) <= 1e-6 * scale;
            if id == "trivial" || id.starts_with("isotrivial") {
                ensure(vanishing, || format!("{id}: theta {theta:e}, ks {ks:e}, scale {scale:e}"))?;
                continue;
            }
            if !vanishing {
                any_positive = true;
                worst = worst.max(f(e, "rel_err")?);
                contraction = contraction.min(f(e, "contraction")?);
            }
        }
        positive += any_positive as usize;
    }
    ensure(families.contains_key("quintic-translation"), || "quintic family missing".into())?;
    ensure(positive >= 3, || format!("only {positive} families with nonzero curvature"))?;
    ensure(worst <= 1e-3 && contraction >= 3.0, || format!("rel_err {worst:e}, contraction {contraction}"))?;
    let per_family = t / families.len() as u32;
    ensure(per_family <= Duration::from_secs(120), || format!("{per_family:?} per family"))?;
    Ok(format!(
        "{positive} curved families, max rel_err {worst:.1e}, min contraction {contraction:.2}, trivial controls vanish, {:.0} ms",
        t.as_secs_f64() * 1e3
    ))
}

fn f(v: &Value, key: &str) -> Result<f64, String> {
    match &v[key] {
        Value::Number(n) => n.as_f64().ok_or_else(|| key.to_string()),
        Value::Null if key == "contraction" => Ok(f64::INFINITY),
        _ => Err(format!("missing {key}")),
    }
}

fn criterion_5() -> Outcome {
    let (r, _) = run("sweep.toml")?;
    let fams = metric(&r, "families")?;
    let sections = r.details["sweep"]["entries"].as_array().map(|a| a.len()).unwrap_or(0) as f64;
    ensure(fams >= 20.0 && sections >= 3.0 * fams, || format!("{fams} families, {sections} entries"))?;
    let min = metric(&r, "min")?;
    ensure(r.verdict == Verdict::Pass && min >= -1e-6, || format!("min normalized curvature {min:e}"))?;
    Ok(format!("{fams} families, {sections} sections, min {min:.2e}, median {:.3e}", metric(&r, "median")?))
}

fn torus_config(name: &str) -> Result<TorusTwistedConfig, String> {
    let loaded = config::load(&configs_dir().join(name)).map_err(|e| e.to_string())?;
    loaded.config.torus.ok_or("no torus table")?.to_core().map_err(|e| e.to_string())
}

fn criterion_6() -> Outcome {
    let (a, _) = run("torus_closed_form.toml")?;
    let (lhs, rhs, scale) = (metric(&a, "u0.lhs")?, metric(&a, "u0.rhs")?, metric(&a, "u0.scale")?);
    ensure((lhs - scale).abs() <= 1e-6 * scale && (rhs - scale).abs() <= 1e-6 * scale, || {
        format!("closed form: lhs {lhs}, rhs {rhs}, |u|^2 {scale}")
    })?;

    let (b, _) = run("torus_degenerate.toml")?;
    let bed = Testbed::new(torus_config("torus_degenerate.toml")?, Execution::Parallel).map_err(|e| e.to_string())?;
    for j in 0..bed.config.k as usize {
        let id = format!("u{j}");
        let scale = metric(&b, &format!("{id}.scale"))?;
        let (l, r) = (metric(&b, &format!("{id}.lhs"))?, metric(&b, &format!("{id}.rhs"))?);
        ensure(l.abs() <= 1e-8 * scale && r.abs() <= 1e-8 * scale, || format!("degenerate {id}: lhs {l:e}, rhs {r:e}"))?;
        let mut u = vec![Complex64::new(0.0, 0.0); bed.config.k as usize];
        u[j] = Complex64::new(1.0, 0.0);
        let data = bed.fiber_field_data(&u, bed.config.t0).map_err(|e| e.to_string())?;
        ensure(data.c.iter().all(|v| *v == 0.0) && data.eta.iter().all(|v| v.norm() == 0.0), || {
            format!("degenerate {id}: c or eta nonzero")
        })?;
    }

    let mut worst: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    for (name, k) in [("torus_generic_k2.toml", 2), ("torus_generic_k3.toml", 3)] {
        let (r, t) = run(name)?;
        ensure(r.verdict == Verdict::Pass, || format!("{name}: {:?}", r.message))?;
        ensure(r.tolerances.get("n") == Some(&64.0), || format!("{name}: N != 64"))?;
        for j in 0..k {
            let e = metric(&r, &format!("u{j}.rel_err"))?;
            let t2 = metric(&r, &format!("u{j}.rhs_term2"))?;
            ensure(e <= 1e-3 && t2 > 0.0, || format!("{name} u{j}: rel_err {e:e}, term2 {t2:e}"))?;
            worst = worst.max(e);
        }
        slowest = slowest.max(t);
    }
    ensure(slowest <= Duration::from_secs(180), || format!("generic run took {slowest:?}"))?;
    Ok(format!(
        "closed form |lhs-|u|^2| {:.1e}, degenerate sides vanish, generic k=2,3 rel_err <= {worst:.1e}",
        (lhs - scale).abs() / scale
    ))
}

fn criterion_7() -> Outcome {
    let mut lemma: f64 = 0.0;
    let mut det: f64 = 0.0;
    for (path, cfg) in shipped_of(&[Kind::Thm12]) {
        let (r, _) = run_cfg(&cfg, "")?;
        lemma = lemma.max(metric(&r, "lemma41_residual_max")?);
        det = det.max(metric(&r, "det_identity_residual_max")?);
        ensure(lemma <= 1e-10 && det <= 1e-12, || format!("{}: {lemma:e}, {det:e}", path.display()))?;
    }
    Ok(format!("pointwise residuals {lemma:.1e} and {det:.1e}"))
}

fn criterion_8() -> Outcome {
    let mut min_margin = f64::INFINITY;
    let mut eq_gap: f64 = 0.0;
    let mut count = 0;
    for (path, cfg) in shipped_of(&[Kind::Thm12, Kind::Bound15]) {
        let core = cfg.torus.as_ref().unwrap().to_core().map_err(|e| e.to_string())?;
        let sections = cfg.torus.as_ref().unwrap().sections().map_err(|e| e.to_string())?;
        let bed = Testbed::new(core, Execution::Parallel).map_err(|e| e.to_string())?;
        for u in &sections {
            let b = torus::bound_1_5_on(&bed, u).map_err(|e| e.to_string())?;
            ensure(b.pass && b.margin >= -b.slack * b.scale, || format!("{}: {b:?}", path.display()))?;
            min_margin = min_margin.min(b.margin / b.scale);
            if b.eta_vanishes {
                eq_gap = eq_gap.max(b.margin.abs() / b.scale);
                ensure(b.margin.abs() <= 1e-6 * b.scale, || format!("{}: equality gap {:e}", path.display(), b.margin))?;
            }
            count += 1;
        }
    }
    Ok(format!("{count} sections, min relative margin {min_margin:.2e}, equality gap when eta = 0: {eq_gap:.1e}"))
}

fn criterion_9() -> Outcome {
    let mut defect: f64 = 0.0;
    for (_, cfg) in shipped_of(&[Kind::Thm12]) {
        let (r, _) = run_cfg(&cfg, "")?;
        defect = defect.max(metric(&r, "self_adjointness_residual")?);
    }
    ensure(defect <= 1e-12, || format!("self-adjointness residual {defect:e}"))?;

    let cfg = torus_config("torus_generic_k2.toml")?.with_grid(32);
    let bed = Testbed::new(cfg, Execution::Parallel).map_err(|e| e.to_string())?;
    let u = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let data = bed.fiber_field_data(&u, bed.config.t0).map_err(|e| e.to_string())?;
    let op = bed.operator(bed.config.t0).map_err(|e| e.to_string())?;
    let sol = bed.solve(&op, &data.eta_unitary).map_err(|e| e.to_string())?;
    let dense: CMat = op.to_dense();
    let hermitian = linalg::hermitian_defect(&dense);
    let eig = dense.symmetric_eigen();
    let v = CMat::from_column_slice(data.eta_unitary.len(), 1, &data.eta_unitary);
    let coeffs = eig.eigenvectors.adjoint() * v;
    let oracle: f64 =
        coeffs.iter().zip(eig.eigenvalues.iter()).map(|(z, l)| z.norm_sqr() / l).sum::<f64>() * bed.config.area_element();
    let pairing_err = (sol.pairing - oracle).abs() / oracle.abs().max(f64::MIN_POSITIVE);
    ensure(pairing_err <= 1e-8, || format!("pairing {} vs dense {oracle}", sol.pairing))?;
    ensure(hermitian <= 1e-12, || "dense operator not Hermitian".into())?;

    let full = torus_config("torus_generic_k2.toml")?;
    let rows = torus::convergence_table(&full, &u, &[(32, full.h), (64, full.h)], Execution::Parallel)
        .map_err(|e| e.to_string())?;
    let change = (rows[1].rhs - rows[0].rhs).abs() / rows[1].rhs.abs();
    ensure(change <= 1e-4, || format!("rhs changed by {change:e} from N = 32 to 64"))?;
    Ok(format!("self-adjointness {defect:.1e}, dense pairing {pairing_err:.1e}, N 32 -> 64 change {change:.1e}"))
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .map(|rd| {
            rd.map(|e| {
                let p = e.unwrap().path();
                (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
            })
            .collect()
        })
        .unwrap_or_default();
    files.sort();
    files
}

fn criterion_10() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_hodgelab");
    let scratch = tempfile::tempdir().map_err(|e| e.to_string())?;
    let modes: [&[&str]; 4] = [&["--threads", "1"], &["--threads", "4"], &["--sequential"], &["--threads", "4"]];
    let mut runs = 0;
    let mut configs = 0;
    for path in shipped() {
        let Ok(loaded) = config::load(&path) else { continue };
        configs += 1;
        let verb = loaded.config.kind.name();
        let mut reference: Option<Vec<(String, Vec<u8>)>> = None;
        for (i, mode) in modes.iter().enumerate() {
            let out = scratch.path().join(format!("{}-{i}", path.file_stem().unwrap().to_string_lossy()));
            let status = Command::new(bin)
                .args(*mode)
                .arg("--plots")
                .arg("--out")
                .arg(&out)
                .arg("--cache-dir")
                .arg(scratch.path().join("cache"))
                .arg(verb)
                .arg(&path)
                .output()
                .map_err(|e| e.to_string())?
                .status;
            ensure(status.code().is_some(), || format!("{}: killed", path.display()))?;
            let snap = snapshot(&out);
            match &reference {
                None => reference = Some(snap),
                Some(r) => ensure(*r == snap, || format!("{} differs in mode {mode:?}", path.display()))?,
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} runs over {configs} shipped configs byte-identical"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("exact multiplication-map table", criterion_1),
        ("kernel lower bound", criterion_2),
        ("period pipeline health", criterion_3),
        ("family curvature identity", criterion_4),
        ("semipositivity sweep", criterion_5),
        ("torus curvature identity", criterion_6),
        ("pointwise identities", criterion_7),
        ("torus upper bound", criterion_8),
        ("solver correctness", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
