use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use ecapm_core::calibration::{expected_link_count, sparse_z};
use ecapm_core::indicators::{
    classifier_scores, confusion, expected_ann, expected_confusion, model_systemicness, observed_ann,
    relative_systemicness, ModelSystemicness,
};
use ecapm_core::io::{
    read_edge_list, read_edge_list_with_labels, read_marginals, write_edge_list_file, write_marginals_file, Marginals,
};
use ecapm_core::synthetic::{generate_fitness, generate_ground_truth_with, perturb_weights, FitnessSpec};
use ecapm_core::{
    draw_seed, BipartiteNetwork, CalibrationResult, CapmModel, EcapmModel, EnsembleSampler, Execution, MecapmModel,
    ModelKind, PairEnsemble, ZSolver,
};

use crate::output::{
    ann_json, calibration_json, cell, confusion_json, ensure_dir, envelope, input_entry, num, scores_json, sha256_file,
    write_json, Tsv,
};
use crate::{CalibrateArgs, EvaluateArgs, Failure, GenerateArgs, ReconstructArgs, ReportArgs, SampleArgs};

type Outcome = Result<(), Failure>;

fn solver(tolerance: Option<f64>) -> Result<ZSolver, Failure> {
    match tolerance {
        None => Ok(ZSolver::default()),
        Some(t) if t > 0.0 && t.is_finite() => Ok(ZSolver::default().with_tolerance(t)),
        Some(t) => Err(Failure::usage(format!("--tolerance must be positive, got {t}"))),
    }
}

fn finish(out_dir: &Path, command: &str, report: Map<String, Value>) -> Outcome {
    let path = out_dir.join(format!("{command}.json"));
    let report = Value::Object(report);
    write_json(&path, &report)?;
    println!("{report}");
    Ok(())
}

fn with_labels(net: BipartiteNetwork, m: &Marginals) -> Result<BipartiteNetwork, Failure> {
    Ok(net.with_labels(m.holder_labels.clone(), m.issuer_labels.clone())?)
}

struct Built {
    model: Box<dyn PairEnsemble>,
    calibration: Option<CalibrationResult>,
}

fn build_model(kind: ModelKind, m: &Marginals, solver: &ZSolver) -> Result<Built, Failure> {
    let s = m.strengths.clone();
    Ok(match kind {
        ModelKind::Ecapm => {
            let (model, fit) = EcapmModel::calibrate(s, m.total_links as f64, solver)?;
            Built {
                model: Box::new(model),
                calibration: Some(fit),
            }
        }
        ModelKind::Mecapm => Built {
            model: Box::new(MecapmModel::new(s)?),
            calibration: None,
        },
        ModelKind::Capm => Built {
            model: Box::new(CapmModel::new(s)?),
            calibration: None,
        },
    })
}

pub fn generate(a: &GenerateArgs) -> Outcome {
    if a.holders == 0 || a.issuers == 0 {
        return Err(Failure::usage("--holders and --issuers must be positive"));
    }
    ensure_dir(&a.out.out)?;
    let holder = generate_fitness(&FitnessSpec {
        distribution: a.holder_fitness,
        count: a.holders,
        seed: draw_seed(a.seed, 1),
    })?;
    let issuer = generate_fitness(&FitnessSpec {
        distribution: a.issuer_fitness,
        count: a.issuers,
        seed: draw_seed(a.seed, 2),
    })?;
    let gt = generate_ground_truth_with(holder, issuer, a.density, a.seed, &solver(a.tolerance)?)?;
    let network = if a.noise > 0.0 {
        perturb_weights(&gt.network, a.noise, draw_seed(a.seed, 3))?
    } else {
        gt.network.clone()
    };
    let truth_path = a.out.out.join("truth.csv");
    let marginals_path = a.out.out.join("marginals.csv");
    write_edge_list_file(&network, &truth_path)?;
    write_marginals_file(&Marginals::of(&network), &marginals_path)?;

    let mut r = envelope("generate", a, Some(a.seed), json!({}));
    r.insert(
        "ground_truth".into(),
        json!({
            "n_holders": a.holders,
            "n_issuers": a.issuers,
            "calibration": calibration_json(&gt.calibration),
            "target_links": gt.target_links,
            "realized_links": network.n_links(),
            "realized_density": network.density()?,
            "total_weight": network.strengths().total(),
        }),
    );
    r.insert(
        "outputs".into(),
        json!({
            "truth": { "path": truth_path.display().to_string(), "sha256": sha256_file(&truth_path)? },
            "marginals": { "path": marginals_path.display().to_string(), "sha256": sha256_file(&marginals_path)? },
        }),
    );
    finish(&a.out.out, "generate", r)
}

pub fn calibrate(a: &CalibrateArgs) -> Outcome {
    ensure_dir(&a.out.out)?;
    let m = read_marginals(&a.marginals)?;
    let s = &m.strengths;
    let target = match (a.links, a.density) {
        (Some(l), _) => l,
        (None, Some(d)) => (d * (s.n_holders() * s.n_issuers()) as f64).round(),
        (None, None) => m.total_links as f64,
    };
    let fit = solver(a.tolerance)?.solve(s.holder(), s.issuer(), target)?;
    let mut r = envelope("calibrate", a, None, json!({ "marginals": input_entry(&a.marginals)? }));
    r.insert("target_links".into(), json!(target));
    r.insert("z".into(), json!(fit.z));
    r.insert("calibration".into(), calibration_json(&fit));
    r.insert(
        "expected_links".into(),
        json!(expected_link_count(fit.z, s.holder(), s.issuer())),
    );
    r.insert("sparse_z".into(), json!(sparse_z(target, s.total()).ok()));
    r.insert("mecapm_z".into(), json!(1.0 / s.total()));
    r.insert("total_weight".into(), json!(s.total()));
    finish(&a.out.out, "calibrate", r)
}

pub fn reconstruct(a: &ReconstructArgs) -> Outcome {
    ensure_dir(&a.out.out)?;
    let m = read_marginals(&a.marginals)?;
    let kind = ModelKind::from(a.model);
    let built = build_model(kind, &m, &solver(a.tolerance)?)?;
    let model = built.model.as_ref();
    let (n, k) = (model.n_holders(), model.n_issuers());
    let s = model.strengths();

    // Rows and columns are streamed straight to disk; nothing N×M is held.
    let mut holders = Tsv::create(
        a.out.out.join(format!("reconstruct_{kind}_holders.tsv")),
        &[
            "holder",
            "strength",
            "expected_degree",
            "expected_strength",
            "strength_variance",
        ],
    )?;
    let mut expected_links = 0.0;
    for i in 0..n {
        let (mut deg, mut st, mut var) = (0.0, 0.0, 0.0);
        for al in 0..k {
            let law = model.weight_law(i, al);
            deg += law.link_probability;
            st += law.mean;
            var += law.variance;
        }
        expected_links += deg;
        holders.row([
            m.holder_labels[i].clone(),
            num(s.holder()[i]),
            num(deg),
            num(st),
            num(var),
        ])?;
    }
    let mut issuers = Tsv::create(
        a.out.out.join(format!("reconstruct_{kind}_issuers.tsv")),
        &[
            "issuer",
            "strength",
            "expected_degree",
            "expected_strength",
            "strength_variance",
        ],
    )?;
    for al in 0..k {
        let (mut deg, mut st, mut var) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let law = model.weight_law(i, al);
            deg += law.link_probability;
            st += law.mean;
            var += law.variance;
        }
        issuers.row([
            m.issuer_labels[al].clone(),
            num(s.issuer()[al]),
            num(deg),
            num(st),
            num(var),
        ])?;
    }
    let mut files = vec![holders.finish()?, issuers.finish()?];
    if a.pairs {
        let mut pairs = Tsv::create(
            a.out.out.join(format!("reconstruct_{kind}_pairs.tsv")),
            &[
                "holder",
                "issuer",
                "probability",
                "conditional_weight",
                "mean",
                "variance",
            ],
        )?;
        for i in 0..n {
            for al in 0..k {
                let law = model.weight_law(i, al);
                if law.link_probability > 0.0 {
                    pairs.row([
                        m.holder_labels[i].clone(),
                        m.issuer_labels[al].clone(),
                        num(law.link_probability),
                        law.conditional_weight.map_or("NA".into(), num),
                        num(law.mean),
                        num(law.variance),
                    ])?;
                }
            }
        }
        files.push(pairs.finish()?);
    }
    let mut r = envelope(
        "reconstruct",
        a,
        None,
        json!({ "marginals": input_entry(&a.marginals)? }),
    );
    r.insert("model".into(), json!(kind.as_str()));
    r.insert(
        "calibration".into(),
        json!(built.calibration.as_ref().map(calibration_json)),
    );
    r.insert("expected_links".into(), json!(expected_links));
    r.insert("outputs".into(), outputs_json(&files)?);
    finish(&a.out.out, "reconstruct", r)
}

fn outputs_json(files: &[PathBuf]) -> Result<Value, Failure> {
    files
        .iter()
        .map(|p| Ok(json!({ "path": p.display().to_string(), "sha256": sha256_file(p)? })))
        .collect::<Result<Vec<_>, Failure>>()
        .map(Value::Array)
}

pub fn sample(a: &SampleArgs) -> Outcome {
    ensure_dir(&a.out.out)?;
    let m = read_marginals(&a.marginals)?;
    let kind = ModelKind::from(a.model);
    let built = build_model(kind, &m, &solver(a.tolerance)?)?;
    let sampler = EnsembleSampler::new(built.model.as_ref(), a.seed);
    let width = a.draws.saturating_sub(1).to_string().len().max(4);
    // Draws are independent files, so they are sampled and written in parallel.
    let results: Vec<Result<(PathBuf, usize), Failure>> = Execution::default().map(a.draws, |k| {
        let net = with_labels(sampler.draw(k as u64), &m)?;
        let path = a.out.out.join(format!("sample_{kind}_{k:0width$}.csv"));
        write_edge_list_file(&net, &path)?;
        Ok((path, net.n_links()))
    });
    let mut draws = Vec::new();
    for (k, res) in results.into_iter().enumerate() {
        let (path, links) = res?;
        draws.push(json!({
            "draw": k,
            "seed": draw_seed(a.seed, k as u64),
            "links": links,
            "path": path.display().to_string(),
            "sha256": sha256_file(&path)?,
        }));
    }
    let mut r = envelope(
        "sample",
        a,
        Some(a.seed),
        json!({ "marginals": input_entry(&a.marginals)? }),
    );
    r.insert("model".into(), json!(kind.as_str()));
    r.insert(
        "calibration".into(),
        json!(built.calibration.as_ref().map(calibration_json)),
    );
    r.insert("draws".into(), Value::Array(draws));
    finish(&a.out.out, "sample", r)
}

fn systemicness_json(s: &ModelSystemicness) -> Value {
    json!({
        "expected_ratio": s.expected_ratio,
        "sigma": s.sigma,
        "sigma_decoupled": s.sigma_decoupled,
    })
}

fn sigma_ratio(num: &[f64], den: &[f64]) -> Vec<Option<f64>> {
    num.iter().zip(den).map(|(a, b)| (*b > 0.0).then(|| a / b)).collect()
}

pub fn evaluate(a: &EvaluateArgs) -> Outcome {
    ensure_dir(&a.out.out)?;
    let mut inputs = Map::new();
    inputs.insert("truth".into(), input_entry(&a.truth)?);
    let (truth, marginals) = match &a.marginals {
        Some(p) => {
            inputs.insert("marginals".into(), input_entry(p)?);
            let m = read_marginals(p)?;
            (
                read_edge_list_with_labels(&a.truth, &m.holder_labels, &m.issuer_labels)?,
                m,
            )
        }
        None => {
            let t = read_edge_list(&a.truth)?;
            let m = Marginals::of(&t);
            (t, m)
        }
    };
    let solver = solver(a.tolerance)?;
    let mut kinds: Vec<ModelKind> = Vec::new();
    for k in a.model.iter().map(|&m| ModelKind::from(m)) {
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }

    let mut models = Map::new();
    let mut systemic: Vec<(ModelKind, ModelSystemicness)> = Vec::new();
    for &kind in &kinds {
        let built = build_model(kind, &marginals, &solver)?;
        let model = built.model.as_ref();
        let expected = expected_confusion(&truth, model)?;
        let sys = model_systemicness(Default::default(), &truth, model)?;
        let mut entry = Map::new();
        entry.insert(
            "calibration".into(),
            json!(built.calibration.as_ref().map(calibration_json)),
        );
        entry.insert("expected_confusion".into(), confusion_json(&expected));
        entry.insert("expected_scores".into(), scores_json(&classifier_scores(&expected)));
        if a.draws > 0 {
            entry.insert("monte_carlo".into(), monte_carlo(&truth, model, a.seed, a.draws)?);
        }
        entry.insert("ann".into(), ann_json(&expected_ann(model)));
        entry.insert("systemicness".into(), systemicness_json(&sys));
        models.insert(kind.as_str().into(), Value::Object(entry));
        systemic.push((kind, sys));
    }

    let mut r = envelope("evaluate", a, Some(a.seed), Value::Object(inputs));
    let observed = observed_ann(&truth);
    r.insert(
        "network".into(),
        json!({
            "n_holders": truth.n_holders(),
            "n_issuers": truth.n_issuers(),
            "links": truth.n_links(),
            "density": truth.density()?,
            "total_weight": truth.strengths().total(),
            "holder_labels": truth.holder_labels(),
            "issuer_labels": truth.issuer_labels(),
        }),
    );
    r.insert("observed".into(), json!({ "ann": ann_json(&observed) }));
    r.insert("models".into(), Value::Object(models));

    let find = |k: ModelKind| systemic.iter().find(|(kind, _)| *kind == k).map(|(_, s)| s);
    let strengths = truth.strengths();
    let overlap: Vec<f64> = (0..truth.n_holders())
        .map(|i| ecapm_core::indicators::overlap_term(&truth, i, None))
        .collect();
    let mut sys = json!({
        "holder_strength": strengths.holder(),
        "observed_overlap": overlap,
    });
    if let (Some(e), Some(m)) = (find(ModelKind::Ecapm), find(ModelKind::Mecapm)) {
        sys["sigma_ratio"] = json!(sigma_ratio(&e.sigma, &m.sigma));
        sys["sigma_ratio_decoupled"] = json!(sigma_ratio(&e.sigma_decoupled, &m.sigma_decoupled));
    }
    r.insert("systemicness".into(), sys);

    if let Some(p) = &a.candidate {
        let cand = read_edge_list_with_labels(p, truth.holder_labels(), truth.issuer_labels())?;
        if let Some(Value::Object(inputs)) = r.get_mut("inputs") {
            inputs.insert("candidate".into(), input_entry(p)?);
        }
        let c = confusion(&truth, &cand)?;
        r.insert(
            "candidate".into(),
            json!({
                "confusion": confusion_json(&c),
                "scores": scores_json(&classifier_scores(&c)),
                "relative_systemicness": relative_systemicness(&truth, &cand)?,
            }),
        );
    }

    let path = a.out.out.join("evaluate.json");
    write_json(&path, &Value::Object(r))?;
    println!(
        "{}",
        json!({ "command": "evaluate", "report": path.display().to_string(), "sha256": sha256_file(&path)? })
    );
    Ok(())
}

/// Mean and standard error of the empirical confusion counts over sampled
/// networks.
fn monte_carlo(truth: &BipartiteNetwork, model: &dyn PairEnsemble, seed: u64, draws: usize) -> Result<Value, Failure> {
    let sampler = EnsembleSampler::new(model, seed);
    let counts = sampler.map(draws, |net| confusion(truth, net).map(|c| c.as_array()));
    let counts = counts.into_iter().collect::<Result<Vec<_>, _>>()?;
    let n = draws as f64;
    let mut mean = [0.0; 4];
    for c in &counts {
        for k in 0..4 {
            mean[k] += c[k] / n;
        }
    }
    let mut se = [0.0; 4];
    if draws > 1 {
        for c in &counts {
            for k in 0..4 {
                se[k] += (c[k] - mean[k]).powi(2);
            }
        }
        for s in &mut se {
            *s = (*s / (n - 1.0) / n).sqrt();
        }
    }
    let obj = |v: [f64; 4]| json!({ "tp": v[0], "tn": v[1], "fp": v[2], "fn": v[3] });
    Ok(json!({ "draws": draws, "mean_confusion": obj(mean), "std_error": obj(se) }))
}

fn field<'a>(v: &'a Value, path: &[&str]) -> Result<&'a Value, Failure> {
    path.iter().try_fold(v, |v, k| {
        v.get(k)
            .ok_or_else(|| Failure::input(format!("report is missing '{}'", path.join("."))))
    })
}

fn array<'a>(v: &'a Value, path: &[&str]) -> Result<&'a Vec<Value>, Failure> {
    field(v, path)?
        .as_array()
        .ok_or_else(|| Failure::input(format!("'{}' is not an array", path.join("."))))
}

pub fn report(a: &ReportArgs) -> Outcome {
    ensure_dir(&a.out.out)?;
    let text = std::fs::read_to_string(&a.input).map_err(|e| crate::output::io_failure(&a.input, e))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", a.input.display())))?;
    if v.get("command").and_then(Value::as_str) != Some("evaluate") {
        return Err(Failure::input(format!(
            "{} is not an evaluate report",
            a.input.display()
        )));
    }
    let models: Vec<String> = field(&v, &["models"])?
        .as_object()
        .map(|m| m.keys().cloned().collect())
        .unwrap_or_default();
    let mut files = Vec::new();

    // ANN trend clouds, one table per layer.
    for (layer, labels_key) in [("holder", "holder_labels"), ("issuer", "issuer_labels")] {
        let labels = array(&v, &["network", labels_key])?;
        let mut header = vec![
            layer.to_string(),
            "degree".into(),
            "strength".into(),
            "neighbor_degree".into(),
            "neighbor_strength".into(),
        ];
        for m in &models {
            for col in ["degree", "neighbor_degree", "neighbor_strength"] {
                header.push(format!("{m}_expected_{col}"));
            }
        }
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut t = Tsv::create(a.out.out.join(format!("ann_{layer}s.tsv")), &header_refs)?;
        let obs = |col: &str| array(&v, &["observed", "ann", layer, col]);
        let (deg, st, nd, ns) = (
            obs("degree")?,
            obs("strength")?,
            obs("neighbor_degree")?,
            obs("neighbor_strength")?,
        );
        let mut expected = Vec::new();
        for m in &models {
            for col in ["degree", "neighbor_degree", "neighbor_strength"] {
                expected.push(array(&v, &["models", m, "ann", layer, col])?);
            }
        }
        for (k, label) in labels.iter().enumerate() {
            let mut row = vec![cell(label), cell(&deg[k]), cell(&st[k]), cell(&nd[k]), cell(&ns[k])];
            row.extend(expected.iter().map(|e| cell(&e[k])));
            t.row(row)?;
        }
        files.push(t.finish()?);
    }

    // Confusion counts and scores.
    let mut t = Tsv::create(
        a.out.out.join("scores.tsv"),
        &[
            "model", "source", "tp", "tn", "fp", "fn", "tpr", "spc", "fpr", "ppv", "acc",
        ],
    )?;
    let counts = |c: &Value| -> Vec<String> { ["tp", "tn", "fp", "fn"].iter().map(|k| cell(&c[*k])).collect() };
    let scores = |s: &Value| -> Vec<String> {
        ["tpr", "spc", "fpr", "ppv", "acc"]
            .iter()
            .map(|k| cell(&s[*k]))
            .collect()
    };
    for m in &models {
        let entry = field(&v, &["models", m])?;
        let mut row = vec![m.clone(), "expected".into()];
        row.extend(counts(&entry["expected_confusion"]));
        row.extend(scores(&entry["expected_scores"]));
        t.row(row)?;
        if let Some(mc) = entry.get("monte_carlo") {
            let mut row = vec![m.clone(), "monte_carlo_mean".into()];
            row.extend(counts(&mc["mean_confusion"]));
            row.extend(std::iter::repeat_n("NA".to_string(), 5));
            t.row(row)?;
        }
    }
    if let Some(c) = v.get("candidate") {
        let mut row = vec!["candidate".into(), "observed".into()];
        row.extend(counts(&c["confusion"]));
        row.extend(scores(&c["scores"]));
        t.row(row)?;
    }
    files.push(t.finish()?);

    // Systemicness per holder.
    let labels = array(&v, &["network", "holder_labels"])?;
    let sys = field(&v, &["systemicness"])?;
    let mut header = vec!["holder".to_string(), "strength".into(), "observed_overlap".into()];
    let mut columns: Vec<&Vec<Value>> = vec![array(sys, &["holder_strength"])?, array(sys, &["observed_overlap"])?];
    for m in &models {
        for col in ["expected_ratio", "sigma", "sigma_decoupled"] {
            header.push(format!("{m}_{col}"));
            columns.push(array(&v, &["models", m, "systemicness", col])?);
        }
    }
    for col in ["sigma_ratio", "sigma_ratio_decoupled"] {
        if let Some(Value::Array(x)) = sys.get(col) {
            header.push(col.into());
            columns.push(x);
        }
    }
    if let Some(Value::Array(x)) = v.get("candidate").and_then(|c| c.get("relative_systemicness")) {
        header.push("candidate_relative".into());
        columns.push(x);
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut t = Tsv::create(a.out.out.join("systemicness.tsv"), &header_refs)?;
    for (k, label) in labels.iter().enumerate() {
        let mut row = vec![cell(label)];
        row.extend(columns.iter().map(|c| cell(&c[k])));
        t.row(row)?;
    }
    files.push(t.finish()?);

    let mut r = envelope("report", a, None, json!({ "input": input_entry(&a.input)? }));
    r.insert("outputs".into(), outputs_json(&files)?);
    finish(&a.out.out, "report", r)
}
