use std::fmt;
use std::path::Path;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use translen::extension::{ext_power, peripheral_analysis, q_alpha, q_alpha_hat, validate_cocycle, CocycleSpec, ExtensionGroup};
use translen::group::{random_element, FreeGroup, FreeWord, GroupOracle, WordMetric};
use translen::hhg::{
    bigset_report, df_ratio_scan, discreteness_probe, run_pipeline, tau_per_domain, validate_structure, PipelineConfig,
    ProbeReport, ProbeSpec, StructureFile, ToyHHGStructure,
};
use translen::metric::FiniteMetricSpace;
use translen::quasiline::{tau_quasiline_bracket, QuasilineConfig};
use translen::quasimorphism::{brooks, defect_sample, homogenize, random_word_pairs, Homogenised, HomogeneousQm, LinearHom, Quasimorphism};
use translen::rational::{fmt_q, parse_q, qi, to_f64};
use translen::registry::Registry;
use translen::tight_span::{barycentre, RetractConfig};
use translen::translation::{barycentric_displacement, distortion_profile, profile_csv, tau_bracket, LipschitzCertificate};
use translen::{Error, Q};

use crate::{BrooksArgs, Cli, Command, ExtensionArgs, HhgAction, PipelineArgs, QuasilineArgs, StructureArgs, TauArgs, TightspanArgs};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_ASSERTION: u8 = 2;
pub const EXIT_BUDGET: u8 = 3;

/// A checked invariant that failed; reported with exit code 2.
#[derive(Debug)]
pub struct AssertionFailed(pub String);

impl fmt::Display for AssertionFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "assertion failed: {}", self.0)
    }
}

impl std::error::Error for AssertionFailed {}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<AssertionFailed>().is_some() {
        return EXIT_ASSERTION;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::BudgetExceeded(_) | Error::DistanceUnknown(_) | Error::IterationBudgetExceeded(_)) => EXIT_BUDGET,
        Some(
            Error::StructureViolation(_)
            | Error::CocycleIdentityFailure(..)
            | Error::AssociativityFailure(..)
            | Error::NormalisationFailure(_)
            | Error::CertificateViolated(_),
        ) => EXIT_ASSERTION,
        _ => EXIT_USAGE,
    }
}

fn ensure(cond: bool, what: impl Into<String>) -> anyhow::Result<()> {
    if cond {
        Ok(())
    } else {
        Err(AssertionFailed(what.into()).into())
    }
}

fn q_arg(name: &str, s: &str) -> anyhow::Result<Q> {
    parse_q(s).with_context(|| format!("--{name}"))
}

struct Out<'a> {
    cli: &'a Cli,
}

impl Out<'_> {
    /// Prints `body` and, with `--out-dir`, writes it to `name`.
    fn emit(&self, name: &str, body: &str) -> anyhow::Result<()> {
        print!("{body}");
        if !body.ends_with('\n') {
            println!();
        }
        if let Some(dir) = &self.cli.out_dir {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(name);
            std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }

    fn json(&self, name: &str, v: &Value) -> anyhow::Result<()> {
        let mut s = serde_json::to_string_pretty(v)?;
        s.push('\n');
        self.emit(name, &s)
    }

    /// `#` lines for a CSV artifact. The timestamp stays on its own line so the
    /// rest of the file is reproducible.
    fn csv_header(&self, command: &str, extra: &[String]) -> Vec<String> {
        let ts = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let mut h = vec![format!("translen {command}"), format!("seed={}", self.cli.seed)];
        h.extend(extra.iter().cloned());
        h.push(format!("generated_unix={ts}"));
        h
    }
}

fn header_text(lines: &[String]) -> String {
    lines.iter().map(|l| format!("# {l}\n")).collect()
}

fn csv_text(rows: &[Vec<String>]) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    let out = Out { cli };
    match &cli.command {
        Command::Tightspan(a) => tightspan(&out, a),
        Command::Tau(a) => tau(&out, a),
        Command::Brooks(a) => brooks_cmd(&out, a),
        Command::Extension(a) => extension(&out, a),
        Command::Quasiline(a) => quasiline(&out, a),
        Command::Hhg(h) => hhg(&out, &h.action),
        Command::Pipeline(a) => pipeline(&out, a),
    }
}

fn read_metric(path: &Path) -> anyhow::Result<FiniteMetricSpace> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let json = path.extension().is_some_and(|e| e == "json") || text.trim_start().starts_with('{');
    Ok(if json { FiniteMetricSpace::from_json(&text)? } else { FiniteMetricSpace::from_csv(&text)? })
}

fn tightspan(out: &Out, a: &TightspanArgs) -> anyhow::Result<()> {
    let space = Arc::new(read_metric(&a.metric)?);
    let indices = a
        .tuple
        .split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<usize>()
                .ok()
                .or_else(|| space.labels().iter().position(|l| l == t))
                .ok_or_else(|| anyhow!("no point {t:?} in the metric"))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let cfg = RetractConfig::with_eta(q_arg("eta", &a.eta)?);
    let p = barycentre(&space, &indices, &cfg)?;
    ensure(p.certificate <= cfg.eta, "retraction certificate exceeds eta")?;
    out.json("tightspan.json", &json!({ "tuple": indices, "eta": fmt_q(&cfg.eta), "barycentre": p.to_json() }))
}

fn tau(out: &Out, a: &TauArgs) -> anyhow::Result<()> {
    let reg = Registry::with_defaults();
    let group = reg.group(&a.group)?;
    let g = group.parse_element(&a.element)?;
    let metric = WordMetric::new(group.as_ref(), a.cap, out.cli.budget);
    let cert = match &a.certify {
        Some(spec) => {
            let mut c = LipschitzCertificate::parse(spec, group.clone())?;
            c.validate(group.as_ref(), a.certify_radius, out.cli.budget)?;
            Some(c)
        }
        None => None,
    };
    if a.profile {
        let rows = distortion_profile(&metric, &g, a.n)?;
        let lower = cert.as_ref().map(|c| c.tau_lower(&g)).transpose()?;
        let header = out.csv_header(
            "tau --profile",
            &[format!("group={}", group.name()), format!("element={}", group.format_element(&g)), format!("N={}", a.n)],
        );
        out.emit("tau_profile.csv", &profile_csv(&rows, lower.as_ref(), &header)?)?;
    } else {
        let b = tau_bracket(&metric, &g, a.n, cert.as_ref())?;
        out.json(
            "tau.json",
            &json!({ "group": group.name(), "element": group.format_element(&g), "bracket": b, "certificate": cert.as_ref().map(|c| c.name.clone()) }),
        )?;
    }
    if let Some(n) = a.barycentric {
        let d = barycentric_displacement(&metric, &g, n, &RetractConfig::default())?;
        out.json("tau_barycentric.json", &serde_json::to_value(&d)?)?;
        ensure(d.holds, format!("barycentric displacement {} exceeds d(1,g^n)/n + 2 eta", fmt_q(&d.displacement)))?;
    }
    Ok(())
}

fn brooks_cmd(out: &Out, a: &BrooksArgs) -> anyhow::Result<()> {
    let h = brooks(&FreeWord::parse(&a.pattern, a.rank)?)?;
    let group = FreeGroup::new(a.rank);
    let mut values = Vec::new();
    for w in &a.word {
        let x = group.parse_element(w)?;
        let hv = homogenize(&h, &group, &x, a.hom_n)?;
        values.push(json!({
            "word": group.format_element(&x),
            "value": fmt_q(&h.evaluate(&x)?),
            "interval": hv.interval(),
            "n_used": hv.n_used,
        }));
    }
    let mut report = json!({ "pattern": h.name(), "defect_bound": fmt_q(&h.defect_bound()), "values": values });
    let mut violated = None;
    if let Some(count) = a.sample {
        let pairs = random_word_pairs(a.rank, a.max_len, count, out.cli.seed);
        let d = defect_sample(&h, &group, &pairs)?;
        if d > h.defect_bound() {
            violated = Some(fmt_q(&d));
        }
        report["sample"] = json!({ "pairs": count, "max_len": a.max_len, "seed": out.cli.seed, "max_defect": fmt_q(&d) });
    }
    out.json("brooks.json", &report)?;
    match violated {
        Some(d) => Err(AssertionFailed(format!("sampled defect {d} exceeds the bound")).into()),
        None => Ok(()),
    }
}

fn extension(out: &Out, a: &ExtensionArgs) -> anyhow::Result<()> {
    let mut reg = Registry::with_defaults();
    for p in &a.param {
        let (k, v) = p.split_once('=').ok_or_else(|| anyhow!("--param expects name=value, got {p:?}"))?;
        reg.params.insert(k.trim().to_string(), q_arg("param", v.trim())?);
    }
    let spec: CocycleSpec =
        if a.cocycle.trim_start().starts_with('{') { serde_json::from_str(&a.cocycle)? } else { CocycleSpec::parse(&a.cocycle)? };
    let cocycle = reg.cocycle(&spec)?;
    let ext = ExtensionGroup::new(cocycle, spec.kind != "heisenberg")?;
    let elem = |s: &Option<String>, which: &str| -> anyhow::Result<_> {
        let s = s.as_deref().ok_or_else(|| anyhow!("--op {} needs --{which}", a.op))?;
        Ok(ext.parse_element(s)?)
    };
    let v = match a.op.as_str() {
        "mult" => {
            let (x, y) = (elem(&a.a, "a")?, elem(&a.b, "b")?);
            json!({ "result": ext.format_element(&ext.multiply(&x, &y)?) })
        }
        "inverse" => json!({ "result": ext.format_element(&ext.invert(&elem(&a.a, "a")?)?) }),
        "power" => json!({ "n": a.n, "result": ext.format_element(&ext_power(&ext, &elem(&a.a, "a")?, a.n)?) }),
        "q-alpha" => json!({ "q_alpha": q_alpha(&elem(&a.a, "a")?)? }),
        "q-alpha-hat" => json!({ "q_alpha_hat": q_alpha_hat(&ext, &elem(&a.a, "a")?, a.hom_n)? }),
        "peripheral" => {
            let s = a.a.as_deref().ok_or_else(|| anyhow!("--op peripheral needs --a (a base element)"))?;
            let g = ext.base().parse_element(s)?;
            serde_json::to_value(peripheral_analysis(&ext, &g, a.search_bound, &q_arg("tol", &a.tol)?, a.hom_n)?)?
        }
        "validate" => {
            let mut rng = ChaCha8Rng::seed_from_u64(out.cli.seed);
            let base = ext.base().clone();
            let triples = (0..a.triples)
                .map(|_| {
                    let mut r = || random_element(base.as_ref(), &mut rng, 12);
                    Ok((r()?, r()?, r()?))
                })
                .collect::<translen::Result<Vec<_>>>()?;
            let report = validate_cocycle(&ext, &triples)?;
            let ok = report.bound_respected;
            out.json("extension_validate.json", &serde_json::to_value(&report)?)?;
            return ensure(ok, "cocycle exceeds its declared bound");
        }
        op => bail!("unknown --op {op:?}; expected mult, inverse, power, q-alpha, q-alpha-hat, peripheral or validate"),
    };
    let mut v = v;
    v["cocycle"] = json!(ext.cocycle().id());
    v["op"] = json!(a.op);
    out.json("extension.json", &v)
}

fn s_hat(spec: &str, group: &Arc<dyn GroupOracle>, hom_n: u64) -> anyhow::Result<Arc<dyn HomogeneousQm>> {
    if let Some(c) = spec.strip_prefix("linear:") {
        let coeffs = c.split(',').map(|x| q_arg("s-hat", x.trim())).collect::<anyhow::Result<Vec<_>>>()?;
        return Ok(Arc::new(LinearHom::new(coeffs)));
    }
    if spec.starts_with("brooks:") {
        let q: Arc<dyn Quasimorphism> = Registry::with_defaults().quasimorphism(spec, group.as_ref())?;
        return Ok(Arc::new(Homogenised::new(q, group.clone(), hom_n)));
    }
    bail!("unknown --s-hat {spec:?}; expected linear:<c1,...> or brooks:<word>")
}

fn quasiline(out: &Out, a: &QuasilineArgs) -> anyhow::Result<()> {
    let group = Registry::with_defaults().group(&a.group)?;
    let s = s_hat(&a.s_hat, &group, a.hom_n)?;
    let mut cfg = QuasilineConfig::new(group.clone(), s, q_arg("C", &a.c)?, 4)?;
    cfg.budget = out.cli.budget.min(cfg.budget.max(1));
    let g = group.parse_element(&a.element)?;
    let d = cfg.distance_bounds(&g, a.effort)?;
    let member = cfg.in_generating_set(&g)?;
    let mut rows = vec![vec!["n".to_string(), "lower".into(), "upper".into(), "upper_float".into()]];
    for n in 1..=a.n {
        let b = tau_quasiline_bracket(&cfg, &g, n, a.effort)?;
        rows.push(vec![
            n.to_string(),
            fmt_q(&b.lower),
            b.upper.as_ref().map(fmt_q).unwrap_or_default(),
            b.upper.as_ref().map(|u| format!("{:.9}", to_f64(u))).unwrap_or_default(),
        ]);
    }
    let header = out.csv_header(
        "quasiline",
        &[
            format!("group={}", group.name()),
            format!("s_hat={}", cfg.s_hat().name()),
            format!("C={}", fmt_q(cfg.c())),
            format!("element={}", group.format_element(&g)),
            format!("member={member:?}"),
            format!("distance_lower={} distance_upper={}", d.lower, d.upper.map(|u| u.to_string()).unwrap_or_default()),
        ],
    );
    out.emit("quasiline.csv", &(header_text(&header) + &csv_text(&rows)?))
}

fn structure(a: &StructureArgs) -> anyhow::Result<ToyHHGStructure> {
    let reg = Registry::with_defaults();
    let chosen = [a.structure.is_some(), a.file.is_some(), a.epsilon.is_some()].iter().filter(|&&b| b).count();
    if chosen != 1 {
        bail!("give exactly one of --structure, --file, --epsilon");
    }
    if let Some(path) = &a.file {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let f: StructureFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        return Ok(f.build(&reg)?);
    }
    if let Some(spec) = &a.structure {
        return Ok(reg.structure(spec)?);
    }
    let eps = a.epsilon.as_deref().expect("counted above");
    Ok(match &a.delta {
        Some(d) => reg.structure(&format!("z2_delta_epsilon:{d},{eps}"))?,
        None => reg.structure(&format!("z2_epsilon:{eps}"))?,
    })
}

fn probe_rows(r: &ProbeReport) -> Vec<Vec<String>> {
    let mut rows = vec![["g", "power", "domain", "lower", "upper", "classified_growing"].map(String::from).to_vec()];
    for w in &r.witnesses {
        rows.push(vec![
            w.g.clone(),
            w.power.to_string(),
            w.domain.clone(),
            fmt_q(&w.bracket.lower),
            w.bracket.upper.as_ref().map(fmt_q).unwrap_or_default(),
            w.classified_growing.to_string(),
        ]);
    }
    rows
}

fn hhg(out: &Out, action: &HhgAction) -> anyhow::Result<()> {
    match action {
        HhgAction::Validate { s } => {
            let st = structure(s)?;
            let report = validate_structure(&st)?;
            out.json("hhg_validate.json", &serde_json::to_value(&report)?)
        }
        HhgAction::Scan { s, radius, d } => {
            let st = structure(s)?;
            let scan = df_ratio_scan(&st, *radius, &q_arg("D", d)?, out.cli.budget)?;
            out.json("hhg_scan.json", &serde_json::to_value(&scan)?)
        }
        HhgAction::Tau { s, element, n } => {
            let st = structure(s)?;
            let g = st.group.parse_element(element)?;
            let taus = tau_per_domain(&st, &g, *n)?;
            let big = bigset_report(&st, &g, 4096)?;
            out.json(
                "hhg_tau.json",
                &json!({ "structure": st.name, "element": st.group.format_element(&g), "domains": taus, "bigset": big }),
            )
        }
        HhgAction::Probe { s, tau0, radius, tau_n, horizon } => {
            let st = structure(s)?;
            let mut spec = ProbeSpec::new(*radius, q_arg("tau0", tau0)?);
            spec.tau_n = *tau_n;
            spec.horizon = *horizon;
            let r = discreteness_probe(&st, &spec)?;
            let header = out.csv_header(
                "hhg probe",
                &[
                    format!("structure={}", r.structure),
                    format!("radius={} tau0={} power={}", r.radius, fmt_q(&spec.tau0), r.power),
                    format!("sample={} examined={} candidates={} truncated={}", r.sample, r.examined, r.candidates, r.truncated),
                ],
            );
            out.emit("probe.csv", &(header_text(&header) + &csv_text(&probe_rows(&r))?))?;
            if let Some(dir) = &out.cli.out_dir {
                std::fs::write(dir.join("probe.json"), serde_json::to_string_pretty(&r)? + "\n")?;
            }
            ensure(r.orthogonal_bigsets, "bigsets of the probed elements are not pairwise orthogonal")
        }
    }
}

fn pipeline(out: &Out, a: &PipelineArgs) -> anyhow::Result<()> {
    let mut cfg = PipelineConfig::new(q_arg("epsilon", &a.epsilon)?, q_arg("C", &a.c)?, q_arg("tau0", &a.tau0)?);
    cfg.radius = a.radius;
    cfg.tau_n = a.tau_n;
    cfg.horizon = a.horizon;
    let r = run_pipeline(&cfg)?;
    out.json("pipeline.json", &serde_json::to_value(&r)?)?;
    ensure(r.tau_t.contains(&qi(1)), "tau_A(t) bracket does not contain 1")?;
    ensure(r.probe.orthogonal_bigsets, "bigsets of the probed elements are not pairwise orthogonal")?;
    ensure(r.undistortion.holds, "uniform undistortion check failed")
}
