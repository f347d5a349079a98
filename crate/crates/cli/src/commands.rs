use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use defframe::basis::BasisStore;
use defframe::corpus::{align_triples, parse_definitions, parse_similarity, read_conll_file, read_triples, write_conll_file, SimPair};
use defframe::frames::{read_encoded_file, read_frames_file, write_encoded_file, write_frames_file};
use defframe::frames::{decode as decode_frame, encode as encode_frame, extract_frame, EncodedFrame, RowMask};
use defframe::sim_eval::{common_vocabulary, evaluate, min_size_gate, BasisCosine, EvalOptions, FrameCosine, GoldOracle, Representer};
use defframe::tagger::{train_with_progress, TaggerConfig, TaggerModel};
use defframe::transform::{fit_all, fit_kfold, FitConfig, Problem};

use crate::manifest::Run;
use crate::report::{num, Table};
use crate::{AlignArgs, CliError, DecodeArgs, EncodeArgs, EvalArgs, ExtractArgs, FitArgs, Joint, TrainArgs};

type Result<T> = std::result::Result<T, CliError>;

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn load_basis(path: &Path, keep_case: bool, run: &mut Run) -> Result<BasisStore> {
    let basis = BasisStore::load(path, !keep_case)?;
    run.input(path);
    run.set("lowercase", !keep_case);
    if basis.duplicates() > 0 {
        eprintln!("warning: {}: {} duplicate tokens ignored", path.display(), basis.duplicates());
    }
    Ok(basis)
}

pub fn align(args: AlignArgs) -> Result<()> {
    let mut run = Run::new("align");
    run.input(&args.triples);
    run.set("fallback_tagger", args.fallback_tagger);
    let triples = read_triples(&args.triples)?;
    let out = align_triples(&triples, args.fallback_tagger);
    write_conll_file(&args.out, &out.sentences)?;

    let skips = sidecar(&args.out, ".skips.tsv");
    let mut table = Table::new(&["triple", "reason", "concept", "relation", "term"]);
    for &(i, reason) in &out.report.skipped {
        let t = &triples[i];
        table.push(vec![
            (i + 1).to_string(),
            reason.to_string(),
            t.concept.clone(),
            t.relation.to_string(),
            t.term.clone(),
        ]);
    }
    write_text(&skips, &table.tsv())?;
    eprintln!(
        "aligned {} of {} triples into {} sentences; {} skipped",
        out.report.aligned(),
        out.report.total,
        out.sentences.len(),
        out.report.skip_count()
    );
    run.output(&args.out);
    run.output(&skips);
    run.finish()
}

pub fn train_tagger(args: TrainArgs) -> Result<()> {
    let mut run = Run::new("train-tagger");
    let mut config = match &args.config {
        Some(p) => {
            run.input(p);
            TaggerConfig::from_kv(&read_text(p)?)?
        }
        None => TaggerConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    run.seed(config.seed);
    for (k, v) in config.entries() {
        run.set(k, v);
    }
    let train = read_conll_file(&args.corpus)?;
    let dev = read_conll_file(&args.dev)?;
    run.input(&args.corpus);
    run.input(&args.dev);
    let basis = load_basis(&args.basis.basis, args.basis.keep_case, &mut run)?;

    println!("epoch\ttrain_loss\tdev_f1");
    let (model, report) = train_with_progress(&config, &train, &dev, &basis, |s| {
        println!("{}\t{:.4}\t{:.4}", s.epoch + 1, s.train_loss, s.dev_f1);
    })?;
    if let Some(best) = report.best_epoch {
        eprintln!("kept epoch {} (dev F1 {:.4})", best + 1, report.dev_f1[best]);
    }
    model.save(&args.out)?;
    run.output(&args.out);
    run.finish()
}

pub fn extract(args: ExtractArgs) -> Result<()> {
    let mut run = Run::new("extract");
    let model = TaggerModel::load(&args.model)?;
    run.input(&args.model);
    let basis = load_basis(&args.basis.basis, args.basis.keep_case, &mut run)?;
    model.check_basis(&basis)?;
    let definitions = parse_definitions(&args.definitions)?;
    run.input(&args.definitions);

    let mut frames = Vec::with_capacity(definitions.len());
    for (concept, sentence) in &definitions {
        if basis.lookup_term(concept).is_none() {
            eprintln!("warning: concept `{concept}` is not in the basis; its self row will be zero");
        }
        let ex = extract_frame(&model, concept, sentence, &basis);
        if !ex.concept_found {
            eprintln!("warning: concept `{concept}` not found in its definition; tagged without query flags");
        }
        frames.push(ex.frame);
    }
    write_frames_file(&args.out, &frames)?;
    eprintln!("extracted {} frames", frames.len());
    run.output(&args.out);
    run.finish()
}

pub fn encode(args: EncodeArgs) -> Result<()> {
    let mut run = Run::new("encode");
    run.set("mask", args.mask);
    let frames = read_frames_file(&args.frames)?;
    run.input(&args.frames);
    let basis = load_basis(&args.basis.basis, args.basis.keep_case, &mut run)?;

    let (mut resolved, mut skipped, mut no_concept) = (0, 0, 0);
    let encoded: Vec<EncodedFrame> = frames
        .iter()
        .map(|f| {
            let (enc, report) = encode_frame(f, &basis);
            resolved += report.resolved;
            skipped += report.skipped;
            no_concept += usize::from(!report.concept_resolved);
            enc.restricted(args.mask)
        })
        .collect();
    write_encoded_file(&args.out, &encoded, basis.dim())?;
    eprintln!(
        "encoded {} frames: {resolved} terms resolved, {skipped} skipped, {no_concept} concepts without a vector",
        encoded.len()
    );
    run.output(&args.out);
    run.finish()
}

pub fn decode(args: DecodeArgs) -> Result<()> {
    let mut run = Run::new("decode");
    run.set("k", args.k);
    let (frames, _) = read_encoded_file(&args.enc)?;
    run.input(&args.enc);
    let basis = load_basis(&args.basis.basis, args.basis.keep_case, &mut run)?;

    let mut out = String::new();
    for f in &frames {
        let _ = writeln!(out, "{}", f.concept);
        for row in decode_frame(f, &basis, args.k)? {
            let terms: Vec<String> = row.terms.iter().map(|(t, s)| format!("{t}:{s:.4}")).collect();
            let _ = writeln!(out, "  {}\t{}", row.row, terms.join(" "));
        }
    }
    match &args.out {
        Some(path) => {
            write_text(path, &out)?;
            run.output(path);
            run.finish()
        }
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

fn emit(table: &Table, out: Option<&Path>, markdown: Option<&Path>, run: &mut Run) -> Result<()> {
    match out {
        Some(path) => {
            write_text(path, &table.tsv())?;
            run.output(path);
        }
        None => print!("{}", table.tsv()),
    }
    if let Some(path) = markdown {
        write_text(path, &table.markdown())?;
        run.output(path);
    }
    Ok(())
}

fn load_datasets(paths: &[PathBuf], run: &mut Run) -> Result<Vec<(String, Vec<SimPair>)>> {
    paths
        .iter()
        .map(|p| {
            run.input(p);
            Ok((stem(p), parse_similarity(p)?))
        })
        .collect()
}

fn pair_words(pairs: &[SimPair]) -> impl Iterator<Item = &str> {
    pairs.iter().flat_map(|p| [p.word1.as_str(), p.word2.as_str()])
}

pub fn eval_sim(args: EvalArgs) -> Result<()> {
    let mut run = Run::new("eval-sim");
    run.seed(args.seed);
    run.set("n_perm", args.n_perm);
    run.set("intersect", args.intersect);
    run.set("gold_oracle", args.gold_oracle);
    if args.n_perm < defframe::sim_eval::MIN_PERMUTATIONS {
        return Err(CliError::usage(format!(
            "--n-perm must be at least {}",
            defframe::sim_eval::MIN_PERMUTATIONS
        )));
    }
    let basis = match &args.basis {
        Some(p) => Some(load_basis(p, args.keep_case, &mut run)?),
        None => None,
    };
    let frames = match &args.enc {
        Some(p) => {
            run.input(p);
            let (frames, d) = read_encoded_file(p)?;
            if let Some(b) = &basis {
                if b.dim() != d {
                    return Err(defframe::Error::Dimension { expected: b.dim(), found: d }.into());
                }
            }
            frames
        }
        None => Vec::new(),
    };
    let datasets = load_datasets(&args.dataset, &mut run)?;

    let mut reps: Vec<(String, Box<dyn Representer + '_>)> = Vec::new();
    if let Some(b) = &basis {
        reps.push(("-".into(), Box::new(BasisCosine::new(b))));
    }
    if args.enc.is_some() {
        run.set("masks", args.mask.iter().map(RowMask::to_string).collect::<Vec<_>>().join(" "));
        for &mask in &args.mask {
            reps.push((mask.to_string(), Box::new(FrameCosine::new(&frames, mask))));
        }
    }

    let options = EvalOptions { n_perm: args.n_perm, seed: args.seed };
    let mut table = Table::new(&["dataset", "representer", "mask", "n_pairs", "rho", "p_value", "note"]);
    for (name, pairs) in &datasets {
        let filter: Option<HashSet<String>> = args.intersect.then(|| {
            let all: Vec<&dyn Representer> = reps.iter().map(|(_, r)| r.as_ref()).collect();
            common_vocabulary(pair_words(pairs), &all)
        });
        let oracle = GoldOracle::new(pairs);
        let rows = reps
            .iter()
            .map(|(m, r)| (m.as_str(), r.as_ref()))
            .chain(args.gold_oracle.then_some(("-", &oracle as &dyn Representer)));
        for (mask, rep) in rows {
            let row = match evaluate(pairs, rep, filter.as_ref(), options) {
                Ok(r) => {
                    let note = if r.n_degenerate > 0 {
                        format!("{} degenerate pairs scored 0", r.n_degenerate)
                    } else {
                        String::new()
                    };
                    vec![name.clone(), rep.name(), mask.into(), r.n_pairs.to_string(), num(r.rho), num(r.p_value), note]
                }
                Err(e) => vec![name.clone(), rep.name(), mask.into(), "0".into(), "NA".into(), "NA".into(), e.to_string()],
            };
            table.push(row);
        }
    }
    emit(&table, args.out.as_deref(), args.markdown.as_deref(), &mut run)?;
    if args.out.is_some() || args.markdown.is_some() {
        run.finish()?;
    }
    Ok(())
}

pub fn fit_transform(args: FitArgs) -> Result<()> {
    let mut run = Run::new("fit-transform");
    let mut config = match &args.config {
        Some(p) => {
            run.input(p);
            FitConfig::from_kv(&read_text(p)?)?
        }
        None => FitConfig::default(),
    };
    config.seed = args.seed;
    if let Some(e) = args.epochs {
        config.epochs = e;
    }
    config.validate()?;
    run.seed(config.seed);
    for (k, v) in config.entries() {
        run.set(k, v);
    }
    run.set("folds", args.folds);
    run.set("min_pairs", args.min_pairs);
    if args.folds < 2 {
        return Err(CliError::usage("--folds must be at least 2"));
    }

    let basis = match &args.basis {
        Some(p) => Some(load_basis(p, args.keep_case, &mut run)?),
        None => None,
    };
    let frames = match &args.enc {
        Some(p) => {
            run.input(p);
            read_encoded_file(p)?.0
        }
        None => Vec::new(),
    };
    let basis_name = args
        .basis_name
        .clone()
        .or_else(|| args.basis.as_deref().map(stem))
        .or_else(|| args.enc.as_deref().map(stem))
        .unwrap_or_default();
    let datasets = load_datasets(&args.dataset, &mut run)?;

    let groups: Vec<(String, Vec<&(String, Vec<SimPair>)>)> = match args.joint {
        Some(j) => {
            run.set("joint", if matches!(j, Joint::Sim) { "sim" } else { "rel" });
            let name = if matches!(j, Joint::Sim) { "Sim-All" } else { "Rel-All" };
            vec![(name.to_string(), datasets.iter().collect())]
        }
        None => datasets.iter().map(|d| (d.0.clone(), vec![d])).collect(),
    };

    enum Source<'a> {
        Frames(FrameCosine<'a>),
        Basis(&'a BasisStore),
    }
    let mut sources: Vec<(String, Source)> = Vec::new();
    if args.enc.is_some() {
        for &mask in &args.mask {
            sources.push((format!("DF[{mask}]"), Source::Frames(FrameCosine::new(&frames, mask))));
        }
    }
    if let Some(b) = &basis {
        sources.push(("basis".into(), Source::Basis(b)));
    }
    if let Some(dir) = &args.save_transforms {
        fs::create_dir_all(dir).map_err(|e| CliError::runtime(format!("{}: {e}", dir.display())))?;
    }

    let mut table = Table::new(&["dataset", "basis_name", "rep", "rho_before", "rho_after", "gain", "p_value", "note"]);
    for (group, members) in &groups {
        let raw: usize = members.iter().map(|d| d.1.len()).sum();
        for (rep, source) in &sources {
            let na = |note: String| {
                vec![group.clone(), basis_name.clone(), rep.clone(), "NA".into(), "NA".into(), "NA".into(), "NA".into(), note]
            };
            if !min_size_gate(raw, args.min_pairs) {
                let msg = format!("{raw} pairs, below the minimum of {}", args.min_pairs);
                eprintln!("warning: {group}: rejected, {msg}");
                table.push(na(format!("rejected: {msg}")));
                continue;
            }
            let parts = members
                .iter()
                .map(|d| match source {
                    Source::Frames(f) => Problem::from_frames(&d.1, f),
                    Source::Basis(b) => Ok(Problem::from_basis(&d.1, b)),
                })
                .collect::<defframe::Result<Vec<_>>>()?;
            let result = Problem::concat(&parts).and_then(|p| fit_kfold(&p, args.folds, &config).map(|r| (p, r)));
            match result {
                Ok((problem, report)) => {
                    let mut notes = Vec::new();
                    if problem.skipped > 0 {
                        notes.push(format!("{} pairs without a representation", problem.skipped));
                    }
                    if report.degenerate_folds > 0 {
                        notes.push(format!("{} degenerate folds excluded", report.degenerate_folds));
                    }
                    table.push(vec![
                        group.clone(),
                        basis_name.clone(),
                        rep.clone(),
                        num(report.baseline_rho),
                        num(report.mean_rho),
                        num(report.gain),
                        num(report.p_value),
                        notes.join("; "),
                    ]);
                    eprintln!("{group}\t{rep}\tgain {:+.4}", report.gain);
                    if let Some(dir) = &args.save_transforms {
                        let (t, _) = fit_all(&problem, &config)?;
                        let path = dir.join(format!("{group}.{rep}.lt"));
                        t.save(&path)?;
                        run.output(&path);
                    }
                }
                Err(e) => table.push(na(e.to_string())),
            }
        }
    }
    emit(&table, args.out.as_deref(), args.markdown.as_deref(), &mut run)?;
    run.finish()
}
