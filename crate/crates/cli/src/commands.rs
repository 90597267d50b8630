use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use anyhow::anyhow;
use rayon::prelude::*;
use serde::Serialize;
use taskforge::algebra::{enumerate_depth2, parse, Catalog, Level, TaskExpr};
use taskforge::eval::{
    adaptability, distribution_mass, fit_groups, parse_composition_table, read_predictions, Which,
};
use taskforge::forge::{
    build_balanced_union, build_dataset, export_dataset, import_dataset, with_separators, ForgeError,
    GenerationConfig, Manifest, Outcome,
};
use taskforge::knowledge::sparql::{compile_all, BindPlacement, CompileOptions};

use crate::stores::{eval_failure, forge_failure, load_catalog, store_failure};
use crate::{Analysis, Bind, CompileArgs, EnumerateArgs, EvaluateArgs, Failure, GenerateArgs, WhichArg};

const MANIFEST: &str = "manifest.json";

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
    move |e| Failure::data(anyhow!("cannot write {}: {e}", path.display()))
}

fn out_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(io(dir))
}

fn write_output(dir: &Path, name: &str, bytes: &[u8], manifest: &mut Manifest) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(io(&path))?;
    manifest.output(name, bytes);
    Ok(())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T, manifest: &mut Manifest) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(Failure::data)?;
    text.push('\n');
    write_output(dir, name, text.as_bytes(), manifest)
}

fn finish(manifest: &Manifest, dir: &Path) -> Result<(), Failure> {
    manifest.write(&dir.join(MANIFEST)).map_err(forge_failure)
}

fn start(command: &str, config: Option<&Path>) -> Result<Manifest, Failure> {
    let mut m = Manifest::new(command);
    if let Some(c) = config {
        m.input(c).map_err(forge_failure)?;
    }
    Ok(m)
}

fn parse_task(src: &str, catalog: &Catalog) -> Result<TaskExpr, Failure> {
    parse(src, catalog).map_err(|e| Failure::data(anyhow!("task `{src}`: {e}")))
}

pub fn enumerate(a: &EnumerateArgs, config: Option<&Path>) -> Result<(), Failure> {
    let mut m = start("enumerate", config)?;
    let catalog = load_catalog(a.catalog.as_deref(), &mut m)?;
    m.param("limit", a.limit);
    let text: String = enumerate_depth2(&catalog, a.limit).iter().map(|t| format!("{t}\n")).collect();
    out_dir(&a.out_dir)?;
    write_output(&a.out_dir, "tasks.txt", text.as_bytes(), &mut m)?;
    finish(&m, &a.out_dir)
}

enum Job {
    Task(TaskExpr),
    Balanced(TaskExpr, TaskExpr),
}

fn task_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'))
}

pub fn generate(a: &GenerateArgs, config: Option<&Path>) -> Result<(), Failure> {
    let mut m = start("generate", config)?;
    let stores = a.stores.build(&mut m)?;
    let cfg = GenerationConfig {
        seed: a.seed,
        train_size: a.train_size,
        eval_size: a.eval_size,
        min_examples: a.min_examples,
        seq_len: a.seq_len,
        seq_out_len: a.seq_out_len,
    };
    m.param("generation", &cfg);
    m.param("separator", &a.separator);

    let mut sources: Vec<String> = a.tasks.clone();
    if let Some(list) = &a.task_list {
        m.input(list).map_err(forge_failure)?;
        let text = fs::read_to_string(list).map_err(|e| Failure::data(anyhow!("cannot read {}: {e}", list.display())))?;
        sources.extend(task_lines(&text).map(str::to_string));
    }
    m.param("tasks", &sources);
    let mut jobs = Vec::new();
    if let Some(pair) = &a.balanced_union {
        m.param("balanced-union", pair);
        jobs.push(Job::Balanced(parse_task(&pair[0], stores.catalog())?, parse_task(&pair[1], stores.catalog())?));
    }
    for src in &sources {
        jobs.push(Job::Task(parse_task(src, stores.catalog())?));
    }
    if jobs.is_empty() {
        return Err(Failure::usage(anyhow!("no task given: use --task, --task-list or --balanced-union")));
    }

    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs.max(1)).build().map_err(Failure::usage)?;
    let outcomes: Vec<Result<Outcome, ForgeError>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| match job {
                Job::Task(e) => build_dataset(&stores, e, &cfg),
                Job::Balanced(fe, fh) => build_balanced_union(&stores, fe, fh, &cfg),
            })
            .collect()
    });

    out_dir(&a.out_dir)?;
    let mut index = 0;
    for (job, outcome) in jobs.iter().zip(outcomes) {
        match outcome.map_err(forge_failure)? {
            Outcome::Accepted(mut ds) => {
                if let (Some(sep), Level::Sequence) = (&a.separator, ds.level) {
                    ds = with_separators(&ds, sep).map_err(forge_failure)?;
                }
                let stem = match job {
                    Job::Balanced(..) => "balanced-union".to_string(),
                    Job::Task(_) => {
                        index += 1;
                        format!("task-{:04}", index - 1)
                    }
                };
                let path = a.out_dir.join(format!("{stem}.jsonl"));
                let entry = export_dataset(&ds, &path).map_err(forge_failure)?;
                let meta = format!("{stem}.meta.json");
                let meta_bytes = fs::read(a.out_dir.join(&meta)).map_err(io(&a.out_dir))?;
                m.outputs.insert(entry.file.clone(), entry.sha256.clone());
                m.output(&meta, &meta_bytes);
                m.datasets.push(entry);
            }
            Outcome::Rejected(r) => {
                if matches!(job, Job::Task(_)) {
                    index += 1;
                }
                eprintln!("rejected {r}");
                m.rejections.push(r);
            }
        }
    }
    finish(&m, &a.out_dir)
}

fn property_map(pairs: &[String]) -> Result<std::collections::BTreeMap<String, String>, Failure> {
    pairs
        .iter()
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Failure::usage(anyhow!("--property expects BASE=TERM, got `{p}`")))
        })
        .collect()
}

pub fn compile_sparql(a: &CompileArgs, config: Option<&Path>) -> Result<(), Failure> {
    let mut m = start("compile-sparql", config)?;
    let catalog = load_catalog(a.catalog.as_deref(), &mut m)?;
    let expr = parse_task(&a.task, &catalog)?;
    let opts = CompileOptions {
        bind: match a.bind {
            Bind::Leading => BindPlacement::Leading,
            Bind::Trailing => BindPlacement::Trailing,
        },
        properties: property_map(&a.properties)?,
        prologue: a.prologue.clone(),
    };
    m.param("task", expr.to_string());
    m.param("input", &a.input);
    m.param("bind", format!("{:?}", opts.bind).to_lowercase());
    m.param("properties", &opts.properties);
    m.param("prologue", &opts.prologue);
    let queries = compile_all(&expr, &catalog, a.input.as_deref(), &opts).map_err(store_failure)?;
    out_dir(&a.out_dir)?;
    for q in &queries {
        write_output(&a.out_dir, &format!("{}.rq", q.mode.name()), format!("{}\n", q.text()).as_bytes(), &mut m)?;
    }
    finish(&m, &a.out_dir)
}

fn required<'a, T>(v: &'a Option<T>, flag: &str) -> Result<&'a T, Failure> {
    v.as_ref().ok_or_else(|| Failure::usage(anyhow!("this analysis needs {flag}")))
}

pub fn evaluate(a: &EvaluateArgs, config: Option<&Path>) -> Result<(), Failure> {
    let mut m = start("evaluate", config)?;
    m.param("analysis", format!("{:?}", a.analysis).to_lowercase());
    out_dir(&a.out_dir)?;
    if a.analysis == Analysis::Composition {
        let table = required(&a.table, "--table")?;
        m.input(table).map_err(forge_failure)?;
        m.param("force", a.force);
        let text = fs::read_to_string(table).map_err(|e| Failure::data(anyhow!("cannot read {}: {e}", table.display())))?;
        let rows = parse_composition_table(&text, &table.display().to_string()).map_err(eval_failure)?;
        let fits = fit_groups(&rows, a.force);
        for g in &fits {
            match (&g.fit, &g.error) {
                (Some(f), _) => println!(
                    "{} {}: slope {:.4} intercept {:.4} r2 {:.4} n {}{}",
                    g.function,
                    g.paradigm,
                    f.slope,
                    f.intercept,
                    f.r2,
                    f.points,
                    if f.significant { "" } else { " (fewer than 20 points)" }
                ),
                (None, Some(e)) => eprintln!("{} {}: {e}", g.function, g.paradigm),
                (None, None) => {}
            }
        }
        write_json(&a.out_dir, "composition.json", &fits, &mut m)?;
        return finish(&m, &a.out_dir);
    }

    let ds_path = required(&a.dataset, "--dataset")?;
    let pred_path = required(&a.predictions, "--predictions")?;
    m.input(ds_path).map_err(forge_failure)?;
    m.input(&ds_path.with_extension("meta.json")).map_err(forge_failure)?;
    m.input(pred_path).map_err(forge_failure)?;
    m.param("allow-partial", a.allow_partial);
    let ds = import_dataset(ds_path).map_err(forge_failure)?;
    let preds = read_predictions(pred_path).map_err(eval_failure)?;
    let known: BTreeSet<&str> = ds.examples.iter().map(|e| e.id.as_str()).collect();
    if let Some(p) = preds.iter().find(|p| !known.contains(p.id.as_str())) {
        return Err(Failure::data(anyhow!("prediction id `{}` is not in {}", p.id, ds_path.display())));
    }

    match a.analysis {
        Analysis::Adaptability => {
            let which = match a.which {
                WhichArg::Mem => Which::Mem,
                WhichArg::Gen => Which::Gen,
            };
            m.param("which", which.to_string());
            let report = adaptability(&preds, &ds, which).map_err(eval_failure)?;
            if !report.missing.is_empty() && !a.allow_partial {
                return Err(Failure::data(anyhow!(
                    "{} of {} {} examples have no prediction (first: `{}`); pass --allow-partial to score the rest",
                    report.missing.len(),
                    report.expected,
                    which.split(),
                    report.missing[0]
                )));
            }
            println!("{} adapt_{which} {:.6} ({} of {} scored)", report.task, report.aggregate, report.scored, report.expected);
            write_json(&a.out_dir, &format!("adaptability-{which}.json"), &report, &mut m)?;
        }
        Analysis::Distribution => {
            let stores = a.stores.build(&mut m)?;
            let cat = stores.catalog();
            let (f_e, f_h) = match (&a.f_e, &a.f_h) {
                (Some(e), Some(h)) => (parse_task(e, cat)?, parse_task(h, cat)?),
                (None, None) => match parse_task(&ds.task, cat)? {
                    TaskExpr::Union(e, h) => (*e, *h),
                    other => return Err(Failure::usage(anyhow!("`{other}` is not a union; pass --f-e and --f-h"))),
                },
                _ => return Err(Failure::usage(anyhow!("--f-e and --f-h go together"))),
            };
            m.param("f-e", f_e.to_string());
            m.param("f-h", f_h.to_string());
            let report = distribution_mass(&preds, &ds, &f_e, &f_h, &stores).map_err(eval_failure)?;
            println!(
                "mass {} {:.4} ± {:.4}, mass {} {:.4} ± {:.4} over {} inputs",
                report.task_e, report.mass_e.mean, report.mass_e.std_err, report.task_h, report.mass_h.mean, report.mass_h.std_err,
                report.rows.len()
            );
            write_json(&a.out_dir, "distribution.json", &report, &mut m)?;
        }
        Analysis::Composition => unreachable!("handled above"),
    }
    finish(&m, &a.out_dir)
}
