use hierpin_core::annealed::{annealed_partial, free_energy_eps};
use hierpin_core::certificate::{
    lower_bound, search_certificate, CertificateSettings, MIN_VARIANCE_POOL,
};
use hierpin_core::lattice::{oracle_check, MAX_TRAJECTORIES};
use hierpin_core::population::{critical_point_scan, quenched_free_energy, ScanSettings};
use hierpin_core::record::CERTIFICATE_FIELDS;
use hierpin_core::walk::{build_q_table_for, path_count};
use hierpin_core::{
    annealed_free_energy, fit_singularity, Error, ModelParams, Phase, RecordTable, Regime,
    ResultRecord, VERSION,
};

use crate::args::{
    AnnealedArgs, CertifyArgs, Command, FitArgs, OracleArgs, QuenchedArgs, ScanArgs, WalkArgs,
};

#[derive(Debug)]
pub enum CliError {
    /// Bad input, detected before any computation.
    Usage(String),
    /// The computation itself failed.
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Usage(msg.into()))
}

fn params(b: usize, s: usize, beta: f64, h: f64) -> Result<ModelParams> {
    ModelParams::new(b, s, beta, h).map_err(|e| CliError::Usage(e.to_string()))
}

fn finite(name: &str, xs: &[f64]) -> Result<()> {
    match xs.iter().find(|x| !x.is_finite()) {
        Some(x) => usage(format!("--{name} must be finite, got {x}")),
        None => Ok(()),
    }
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Validates everything, then runs.
pub fn execute(cmd: &Command) -> Result<RecordTable> {
    match cmd {
        Command::Annealed(a) => annealed(a),
        Command::Quenched(a) => quenched(a),
        Command::Scan(a) => scan(a),
        Command::Walkprob(a) => walkprob(a),
        Command::Certify(a) => certify(a),
        Command::OracleCheck(a) => oracle(a),
        Command::FitSingularity(a) => fit(a),
    }
}

fn annealed(a: &AnnealedArgs) -> Result<RecordTable> {
    finite("h", &a.h)?;
    let base = params(a.lattice.b, a.lattice.s, 0.0, 0.0)?;
    if !(a.tol > 0.0) {
        return usage(format!("--tol must be > 0, got {}", a.tol));
    }
    let mut t = RecordTable::new([
        "version",
        "b",
        "s",
        "h",
        "tol",
        "max_levels",
        "phase",
        "value",
        "log_value",
        "levels_used",
    ]);
    for h in sorted(&a.h) {
        let v = annealed_free_energy(&base.with_h(h), a.tol, a.max_levels)?;
        t.push(
            ResultRecord::new()
                .with("version", VERSION)
                .with("b", base.b)
                .with("s", base.s)
                .with("h", h)
                .with("tol", a.tol)
                .with("max_levels", a.max_levels)
                .with("phase", phase_name(v.phase))
                .with("value", v.value)
                .with("log_value", v.log_value)
                .with("levels_used", v.levels_used),
        )?;
    }
    Ok(t)
}

fn phase_name(p: Phase) -> &'static str {
    match p {
        Phase::Localized => "localized",
        Phase::Delocalized => "delocalized",
    }
}

fn check_pool(pool: usize, levels: usize) -> Result<()> {
    if pool < 2 {
        return usage(format!("--pool must be >= 2, got {pool}"));
    }
    if levels < 1 {
        return usage("--levels must be >= 1");
    }
    Ok(())
}

fn quenched(a: &QuenchedArgs) -> Result<RecordTable> {
    finite("beta", &a.beta)?;
    finite("h", &a.h)?;
    check_pool(a.pool, a.levels)?;
    let betas = sorted(&a.beta);
    let hs = sorted(&a.h);
    for &beta in &betas {
        params(a.lattice.b, a.lattice.s, beta, 0.0)?;
    }
    let mut t = RecordTable::new([
        "version",
        "b",
        "s",
        "beta",
        "h",
        "law",
        "pool",
        "levels",
        "seed",
        "mean",
        "std_err",
        "annealed_partial",
    ]);
    for &beta in &betas {
        for &h in &hs {
            let p = params(a.lattice.b, a.lattice.s, beta, h)?;
            let est = quenched_free_energy(&p, &a.law, a.pool, a.levels, a.seed)?;
            t.push(
                ResultRecord::new()
                    .with("version", VERSION)
                    .with("b", p.b)
                    .with("s", p.s)
                    .with("beta", beta)
                    .with("h", h)
                    .with("law", a.law.descriptor())
                    .with("pool", a.pool)
                    .with("levels", a.levels)
                    .with("seed", a.seed)
                    .with("mean", est.mean)
                    .with("std_err", est.std_err)
                    .with("annealed_partial", annealed_partial(&p, a.levels)),
            )?;
        }
    }
    Ok(t)
}

fn scan(a: &ScanArgs) -> Result<RecordTable> {
    finite("beta", &a.beta)?;
    finite("h-lo", &[a.h_lo, a.h_hi])?;
    if !(a.h_lo < a.h_hi) {
        return usage(format!(
            "need --h-lo < --h-hi, got {} and {}",
            a.h_lo, a.h_hi
        ));
    }
    if !(a.threshold > 0.0) {
        return usage(format!("--threshold must be > 0, got {}", a.threshold));
    }
    let mut levels = a.levels.clone();
    levels.sort_unstable();
    levels.dedup();
    for &n in &levels {
        check_pool(a.pool, n)?;
    }
    let betas = sorted(&a.beta);
    for &beta in &betas {
        params(a.lattice.b, a.lattice.s, beta, 0.0)?;
    }
    let mut t = RecordTable::new([
        "version",
        "b",
        "s",
        "beta",
        "law",
        "pool",
        "levels",
        "seed",
        "h_lo",
        "h_hi",
        "threshold",
        "iterations",
        "h_pseudo",
    ]);
    for &beta in &betas {
        for &n in &levels {
            let p = params(a.lattice.b, a.lattice.s, beta, 0.0)?;
            let cfg = ScanSettings {
                pool_size: a.pool,
                levels: n,
                seed: a.seed,
                h_lo: a.h_lo,
                h_hi: a.h_hi,
                threshold: a.threshold,
                iterations: a.iterations,
            };
            let hc = critical_point_scan(&p, &a.law, &cfg)?;
            t.push(
                ResultRecord::new()
                    .with("version", VERSION)
                    .with("b", p.b)
                    .with("s", p.s)
                    .with("beta", beta)
                    .with("law", a.law.descriptor())
                    .with("pool", a.pool)
                    .with("levels", n)
                    .with("seed", a.seed)
                    .with("h_lo", a.h_lo)
                    .with("h_hi", a.h_hi)
                    .with("threshold", a.threshold)
                    .with("iterations", a.iterations)
                    .with("h_pseudo", hc),
            )?;
        }
    }
    Ok(t)
}

fn walkprob(a: &WalkArgs) -> Result<RecordTable> {
    let b = a.b.unwrap_or(a.s);
    params(b, a.s, 0.0, 0.0)?;
    if a.k < 1 {
        return usage("--k must be >= 1 (q_0 = 0 makes p_{0,m} vanish)");
    }
    let tables = build_q_table_for(b, a.s, a.n)?;
    let mut t = RecordTable::new([
        "version",
        "b",
        "s",
        "k",
        "m",
        "q",
        "one_minus_q",
        "log_p_km",
        "log_path_count",
        "path_count",
    ]);
    for (m, &q) in tables.q.iter().enumerate() {
        let log_p = (m >= a.k).then(|| tables.log_p_kn(a.k, m)).transpose()?;
        let count = path_count(b, a.s, m)?;
        t.push(
            ResultRecord::new()
                .with("version", VERSION)
                .with("b", b)
                .with("s", a.s)
                .with("k", a.k)
                .with("m", m)
                .with("q", q)
                .with("one_minus_q", tables.escape_complement[m])
                .with("log_p_km", log_p)
                .with("log_path_count", count.log)
                .with("path_count", count.exact.map(|n| n.to_string())),
        )?;
    }
    Ok(t)
}

fn certify(a: &CertifyArgs) -> Result<RecordTable> {
    finite("h", &[a.beta, a.h])?;
    let p = params(a.lattice.b, a.lattice.s, a.beta, a.h)?;
    if p.regime() != Regime::Equal {
        return usage("the certificate needs b = s");
    }
    if a.pool < MIN_VARIANCE_POOL {
        return usage(format!(
            "--pool must be >= {MIN_VARIANCE_POOL}, got {}",
            a.pool
        ));
    }
    if a.trials < 1 {
        return usage("--trials must be >= 1");
    }
    if let (Some(k), Some(n)) = (a.k, a.n) {
        if k < 1 || k >= n {
            return usage(format!("need 1 <= k < n, got k={k} n={n}"));
        }
    }
    let cfg = CertificateSettings {
        pool_size: a.pool,
        trials: a.trials,
        seed: a.seed,
        conservative: a.conservative,
    };
    let (certs, found) = match (a.k, a.n) {
        (Some(k), Some(n)) => {
            let c = lower_bound(&p, &a.law, k, n, &cfg)?;
            let ok = c.certifies().then_some(0);
            (vec![c], ok)
        }
        _ => {
            let search = search_certificate(&p, &a.law, &cfg)?;
            (search.tried, search.found)
        }
    };
    match found.map(|i| &certs[i]) {
        Some(c) => eprintln!("certified: k={} n={} bound={:e}", c.k, c.n, c.bound),
        None => eprintln!("no certifying (k, n) among {} tried", certs.len()),
    }
    let columns = std::iter::once("version")
        .chain(CERTIFICATE_FIELDS)
        .chain(["certifies", "selected"]);
    let mut t = RecordTable::new(columns);
    for (i, c) in certs.iter().enumerate() {
        let mut rec = ResultRecord::new().with("version", VERSION);
        let fields = ResultRecord::from(c);
        for (k, v) in fields.keys().zip(fields.values()) {
            rec.push(k, v.clone());
        }
        rec.push("certifies", c.certifies());
        rec.push("selected", found == Some(i));
        t.push(rec)?;
    }
    Ok(t)
}

fn oracle(a: &OracleArgs) -> Result<RecordTable> {
    finite("h", &[a.beta, a.h])?;
    let p = params(a.lattice.b, a.lattice.s, a.beta, a.h)?;
    let top = path_count(p.b, p.s, a.levels)?;
    if top.log > MAX_TRAJECTORIES.ln() {
        return usage(format!(
            "level {} has about e^{:.1} trajectories, above the enumeration budget",
            a.levels, top.log
        ));
    }
    if !(a.tol > 0.0) {
        return usage("--tol must be > 0");
    }
    let mut t = RecordTable::new([
        "version",
        "b",
        "s",
        "beta",
        "h",
        "law",
        "seed",
        "n",
        "draws",
        "trajectories",
        "path_count_ok",
        "max_rel_err",
        "escape_avoiding",
        "escape_prob",
        "q_n",
        "pass",
    ]);
    let mut failures = 0;
    for n in 0..=a.levels {
        let r = oracle_check(&p, &a.law, n, a.draws, a.seed)?;
        let pass = r.passes(a.tol);
        failures += usize::from(!pass);
        t.push(
            ResultRecord::new()
                .with("version", VERSION)
                .with("b", p.b)
                .with("s", p.s)
                .with("beta", p.beta)
                .with("h", p.h)
                .with("law", a.law.descriptor())
                .with("seed", a.seed)
                .with("n", n)
                .with("draws", a.draws)
                .with("trajectories", r.trajectories as usize)
                .with("path_count_ok", r.path_count_matches)
                .with("max_rel_err", r.max_rel_err)
                .with("escape_avoiding", r.escape.avoiding as usize)
                .with("escape_prob", r.escape.probability())
                .with("q_n", r.q_n)
                .with("pass", pass),
        )?;
    }
    if failures > 0 {
        eprintln!("oracle-check: {failures} level(s) disagree");
    }
    Ok(t)
}

fn fit(a: &FitArgs) -> Result<RecordTable> {
    let p = params(a.s, a.s, 0.0, 0.0)?;
    if a.eps.len() < 2 {
        return usage("--eps needs at least two points");
    }
    if let Some(e) = a.eps.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return usage(format!("--eps values must be positive, got {e}"));
    }
    let eps = sorted(&a.eps);
    let f = fit_singularity(&p, &eps)?;
    let mut t = RecordTable::new([
        "version",
        "b",
        "s",
        "eps",
        "inv_eps",
        "neg_log_f",
        "levels_used",
        "slope",
        "intercept",
        "residual",
    ]);
    for &e in &eps {
        let v = free_energy_eps(&p, e)?;
        t.push(
            ResultRecord::new()
                .with("version", VERSION)
                .with("b", p.b)
                .with("s", p.s)
                .with("eps", e)
                .with("inv_eps", 1.0 / e)
                .with("neg_log_f", -v.log_value)
                .with("levels_used", v.levels_used)
                .with("slope", f.slope)
                .with("intercept", f.intercept)
                .with("residual", f.residual),
        )?;
    }
    Ok(t)
}

/// Whether a finished table should turn into a failing exit status.
pub fn failed(cmd: &Command, table: &RecordTable) -> bool {
    matches!(cmd, Command::OracleCheck(_))
        && table
            .rows()
            .iter()
            .any(|r| r.get("pass") == Some(&hierpin_core::Value::Bool(false)))
}
