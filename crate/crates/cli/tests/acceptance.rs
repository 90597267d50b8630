//! Acceptance suite: one line per criterion, non-zero exit on any failure.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use taskforge::algebra::{
    canonicalize, enumerate_depth2, normalize, parse, typecheck, AtomicName, Catalog, Domain, Source, TaskExpr, TaskKind,
};
use taskforge::eval::{
    adaptability, best_grouping, composition_regression, oracle_predictions, score_example, segment_align, Which,
    MIN_SIGNIFICANT_POINTS,
};
use taskforge::fixtures::{paper_stores, toy_stores};
use taskforge::forge::{
    build_balanced_union, build_dataset, seq_sample, with_separators, Answers, Dataset, GenerationConfig, Outcome,
};
use taskforge::knowledge::sparql::{column, compile_sparql, execute_local, task_fragment, CompileOptions, QueryMode};
use taskforge::knowledge::{eval_expr, eval_seq, Stores, Value};

type Verdict = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn eng() -> Domain {
    Domain::Lang("eng".into())
}

fn p(src: &str, cat: &Catalog) -> TaskExpr {
    parse(src, cat).unwrap_or_else(|e| panic!("`{src}`: {e}"))
}

// ---------------------------------------------------------------------------
// 1. Normalization soundness

/// Word sets as bitmasks over an interned vocabulary.
struct Interner {
    ids: HashMap<String, usize>,
}

impl Interner {
    fn id(&mut self, w: &str) -> usize {
        let next = self.ids.len();
        let id = *self.ids.entry(w.to_string()).or_insert(next);
        assert!(id < 128, "vocabulary exceeds the bitmask width");
        id
    }

    fn mask(&mut self, words: &BTreeSet<String>) -> u128 {
        words.iter().fold(0, |m, w| m | 1u128 << self.id(w))
    }
}

/// Word-level task tabulated over interned word ids, filled on demand.
struct Table {
    expr: TaskExpr,
    rel: Vec<Option<u128>>,
    pred: Vec<Option<bool>>,
}

/// Sequential expression with its word-level parts replaced by tables.
enum Node {
    Map(usize),
    Filter(usize),
    Chain(Box<Node>, Box<Node>),
}

/// Literal slot semantics: a sequence is a list of word sets; `map` unions
/// images within each slot, `filter` keeps a slot when some member passes.
struct Literal<'a> {
    stores: &'a Stores,
    interner: Interner,
    words: Vec<String>,
    tables: Vec<Table>,
    by_text: HashMap<String, usize>,
}

fn bits(mut m: u128) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (m != 0).then(|| {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            i
        })
    })
}

impl<'a> Literal<'a> {
    fn new(stores: &'a Stores, universe: &[String]) -> Self {
        let mut interner = Interner { ids: HashMap::new() };
        for w in universe {
            interner.id(w);
        }
        Literal { stores, interner, words: universe.to_vec(), tables: Vec::new(), by_text: HashMap::new() }
    }

    fn table(&mut self, e: &TaskExpr) -> usize {
        let key = e.to_string();
        if let Some(&t) = self.by_text.get(&key) {
            return t;
        }
        self.tables.push(Table { expr: e.clone(), rel: Vec::new(), pred: Vec::new() });
        self.by_text.insert(key, self.tables.len() - 1);
        self.tables.len() - 1
    }

    fn compile(&mut self, e: &TaskExpr) -> Node {
        match e {
            TaskExpr::Map(f) => Node::Map(self.table(f)),
            TaskExpr::Filter(q) => Node::Filter(self.table(q)),
            TaskExpr::MapFilter(f, q) => Node::Chain(Box::new(Node::Map(self.table(f))), Box::new(Node::Filter(self.table(q)))),
            TaskExpr::Chain(outer, inner) => Node::Chain(Box::new(self.compile(outer)), Box::new(self.compile(inner))),
            other => panic!("`{other}` is not sequential"),
        }
    }

    fn word_of(&mut self, id: usize) -> String {
        if id >= self.words.len() {
            let mut by_id: Vec<(usize, String)> = self.interner.ids.iter().map(|(w, i)| (*i, w.clone())).collect();
            by_id.sort();
            self.words = by_id.into_iter().map(|(_, w)| w).collect();
        }
        self.words[id].clone()
    }

    fn image(&mut self, t: usize, id: usize) -> u128 {
        if let Some(Some(m)) = self.tables[t].rel.get(id) {
            return *m;
        }
        let w = self.word_of(id);
        let set = eval_expr(self.stores, &self.tables[t].expr, &w).expect("word-level relation").into_set();
        let m = self.interner.mask(&set);
        let rel = &mut self.tables[t].rel;
        if rel.len() <= id {
            rel.resize(id + 1, None);
        }
        rel[id] = Some(m);
        m
    }

    fn holds(&mut self, t: usize, id: usize) -> bool {
        if let Some(Some(b)) = self.tables[t].pred.get(id) {
            return *b;
        }
        let w = self.word_of(id);
        let b = eval_expr(self.stores, &self.tables[t].expr, &w).expect("word-level predicate") == Value::Bool(true);
        let pred = &mut self.tables[t].pred;
        if pred.len() <= id {
            pred.resize(id + 1, None);
        }
        pred[id] = Some(b);
        b
    }

    fn apply(&mut self, node: &Node, slots: &mut Vec<u128>) {
        match node {
            Node::Map(t) => {
                for s in slots.iter_mut() {
                    *s = bits(*s).fold(0, |acc, i| acc | self.image(*t, i));
                }
            }
            Node::Filter(t) => slots.retain(|&s| bits(s).any(|i| self.holds(*t, i))),
            Node::Chain(outer, inner) => {
                self.apply(inner, slots);
                self.apply(outer, slots);
            }
        }
    }
}

/// `None` stands for the empty set of output sequences.
fn canonical_slots(slots: Vec<u128>) -> Option<Vec<u128>> {
    if slots.contains(&0) {
        None
    } else {
        Some(slots)
    }
}

fn toy_sequential_exprs(cat: &Catalog) -> Vec<TaskExpr> {
    let r1: Vec<TaskExpr> = ["synonyms[eng]", "antonyms[eng]", "hyponyms[eng]"].iter().map(|s| p(s, cat)).collect();
    let p1: Vec<TaskExpr> = ["is-POS-noun", "is-POS-verb", "is-sentiment-positive"].iter().map(|s| p(s, cat)).collect();
    let mut r2 = r1.clone();
    let mut p2 = p1.clone();
    for (i, a) in r1.iter().enumerate() {
        for (j, b) in r1.iter().enumerate() {
            r2.push(TaskExpr::chain(a.clone(), b.clone()));
            if i < j {
                r2.push(TaskExpr::union(a.clone(), b.clone()));
                r2.push(TaskExpr::intersection(a.clone(), b.clone()));
            }
        }
    }
    for (i, a) in p1.iter().enumerate() {
        for (j, b) in p1.iter().enumerate() {
            if i < j {
                p2.push(TaskExpr::land(a.clone(), b.clone()));
                p2.push(TaskExpr::lor(a.clone(), b.clone()));
            }
        }
        for r in &r1 {
            p2.push(TaskExpr::chain(a.clone(), r.clone()));
        }
    }
    let mut s2 = Vec::new();
    for r in &r1 {
        s2.push(TaskExpr::map(r.clone()));
    }
    for q in &p1 {
        s2.push(TaskExpr::filter(q.clone()));
    }
    for r in &r1 {
        for q in &p1 {
            s2.push(TaskExpr::map_filter(r.clone(), q.clone()));
        }
    }
    let mut all: BTreeSet<TaskExpr> = s2.iter().cloned().collect();
    all.extend(r2.iter().map(|r| TaskExpr::map(r.clone())));
    all.extend(p2.iter().map(|q| TaskExpr::filter(q.clone())));
    for r in &r2 {
        for q in &p2 {
            all.insert(TaskExpr::map_filter(r.clone(), q.clone()));
        }
    }
    for a in &s2 {
        for b in &s2 {
            all.insert(TaskExpr::chain(a.clone(), b.clone()));
        }
    }
    all.into_iter().filter(|e| e.depth() <= 3).collect()
}

fn sequences(universe: &[usize], max_len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for &w in universe {
                let mut t: Vec<usize> = s.clone();
                t.push(w);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let stores = toy_stores().map_err(|e| e.to_string())?;
    let cat = stores.catalog();
    let universe = stores.universe(&eng()).map_err(|e| e.to_string())?;
    ensure!(universe.len() <= 50, "toy store has {} words", universe.len());
    let exprs = toy_sequential_exprs(cat);
    let mut lit = Literal::new(&stores, &universe);
    let ids: Vec<usize> = (0..universe.len()).collect();
    let seqs = sequences(&ids, 4);
    let mut checked = 0u64;
    let mut slots = Vec::with_capacity(4);
    for e in &exprs {
        let nf = normalize(e, cat).map_err(|err| format!("{e}: {err}"))?;
        let node = lit.compile(e);
        let (map_t, filter_t) = (lit.table(&nf.map_rel), lit.table(&nf.filter_pred));
        // Normal form evaluated word by word, memoized.
        let nf_slot: Vec<Option<u128>> =
            ids.iter().map(|&i| if lit.holds(filter_t, i) { Some(lit.image(map_t, i)) } else { None }).collect();
        for s in &seqs {
            slots.clear();
            slots.extend(s.iter().map(|&i| 1u128 << i));
            lit.apply(&node, &mut slots);
            let literal = canonical_slots(slots.clone());
            let normal = canonical_slots(s.iter().filter_map(|&i| nf_slot[i]).collect());
            ensure!(literal == normal, "`{e}` on {:?}: literal {literal:?} vs normal form {normal:?}", s.iter().map(|&i| &universe[i]).collect::<Vec<_>>());
            checked += 1;
        }
        // The library evaluator agrees with the word-by-word normal form.
        for s in seqs.iter().filter(|s| s.len() <= 2) {
            let words: Vec<String> = s.iter().map(|&i| universe[i].clone()).collect();
            let got = eval_seq(&stores, &nf, &words).map_err(|err| err.to_string())?;
            let got: Vec<u128> = got.slots().iter().map(|slot| lit.interner.mask(&slot.iter().cloned().collect())).collect();
            let want: Vec<u128> = s.iter().filter_map(|&i| nf_slot[i]).collect();
            ensure!(got == want, "eval_seq disagrees for `{e}` on {words:?}");
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1}s");
    Ok(format!("{} expressions x {} sequences ({checked} checks) over {} words", exprs.len(), seqs.len(), universe.len()))
}

// ---------------------------------------------------------------------------
// 2. SPARQL oracle equivalence

fn criterion_2() -> Verdict {
    let stores = paper_stores().map_err(|e| e.to_string())?;
    let cat = stores.catalog();
    let t = stores.triples().ok_or("no triple store")?;
    ensure!(t.len() <= 200, "fixture has {} triples", t.len());

    // Golden strings: the five rule-table templates with `?`-prefixed variables.
    let frag = |s: &str| task_fragment(&p(s, cat), cat, &CompileOptions::default()).map_err(|e| e.to_string());
    let golden = [
        ("father", "?x father ?y ."),
        ("union(mother, father)", "{ ?x mother ?y . } UNION { ?x father ?y . }"),
        ("intersection(mother, father)", "?x mother ?y . ?x father ?y ."),
        ("lor(is-birthplace-london, is-birthplace-nyc)", "BIND( ?y1 || ?y2 AS ?y ) ?x is-birthplace-london ?y1 . ?x is-birthplace-nyc ?y2 ."),
        ("land(is-occupation-actor, is-birthplace-nyc)", "BIND( ?y1 && ?y2 AS ?y ) ?x is-occupation-actor ?y1 . ?x is-birthplace-nyc ?y2 ."),
    ];
    for (src, want) in golden {
        let got = frag(src)?;
        ensure!(got == want, "template for `{src}`: got `{got}`, want `{want}`");
    }

    let mut rels: Vec<TaskExpr> = Vec::new();
    let mut preds: Vec<TaskExpr> = Vec::new();
    let mut specs: Vec<_> = cat.tasks().filter(|s| s.source == Source::Factual).cloned().collect();
    specs.sort_by_key(|s| s.name.to_string());
    for s in &specs {
        match s.kind {
            TaskKind::Relation => {
                rels.push(TaskExpr::atomic(s.name.clone()));
                if !s.name.inverted {
                    let inv: AtomicName = s.name.clone().inverse();
                    if cat.lookup(&inv).is_some() && !specs.iter().any(|o| o.name == inv) {
                        rels.push(TaskExpr::atomic(inv));
                    }
                }
            }
            TaskKind::Predicate => preds.push(TaskExpr::atomic(s.name.clone())),
        }
    }
    let mut exprs: Vec<TaskExpr> = rels.iter().chain(&preds).cloned().collect();
    for (i, a) in rels.iter().enumerate() {
        for (j, b) in rels.iter().enumerate() {
            exprs.push(TaskExpr::chain(a.clone(), b.clone()));
            if i < j {
                exprs.push(TaskExpr::union(a.clone(), b.clone()));
                exprs.push(TaskExpr::intersection(a.clone(), b.clone()));
            }
        }
    }
    for (i, a) in preds.iter().enumerate() {
        for (j, b) in preds.iter().enumerate() {
            if i < j {
                exprs.push(TaskExpr::land(a.clone(), b.clone()));
                exprs.push(TaskExpr::lor(a.clone(), b.clone()));
            }
        }
        for r in &rels {
            exprs.push(TaskExpr::chain(a.clone(), r.clone()));
        }
    }

    let entities: Vec<&String> = t.entities().iter().collect();
    let (mut compared, mut nonempty) = (0u64, 0u64);
    for e in &exprs {
        let sig = typecheck(e, cat).map_err(|err| format!("{e}: {err}"))?;
        ensure!(e.depth() <= 2, "`{e}` is deeper than two");
        for id in &entities {
            let query = compile_sparql(e, cat, &QueryMode::Function { input: Some(id.to_string()) }, &CompileOptions::default())
                .map_err(|err| format!("{e}: {err}"))?;
            let rows = execute_local(t, &query.text()).map_err(|err| format!("{}: {err}", query.text()))?;
            let ys = column(&rows, "y");
            let surface = t.surface(id);
            match sig.kind {
                TaskKind::Relation => {
                    let got: BTreeSet<String> = ys.iter().map(|y| t.surface(y).to_string()).collect();
                    let want = eval_expr(&stores, e, surface).map_err(|err| err.to_string())?.into_set();
                    ensure!(got == want, "`{e}` on {id}: query {got:?}, eval {want:?}");
                    nonempty += u64::from(!want.is_empty());
                }
                TaskKind::Predicate => {
                    let got = ys.contains("true");
                    let want = eval_expr(&stores, e, surface).map_err(|err| err.to_string())? == Value::Bool(true);
                    ensure!(got == want, "`{e}` on {id}: query {got}, eval {want}");
                    nonempty += u64::from(want);
                }
            }
            compared += 1;
        }
    }
    Ok(format!(
        "5 templates verbatim; {} expressions x {} entities = {compared} comparisons ({nonempty} non-empty)",
        exprs.len(),
        entities.len()
    ))
}

// ---------------------------------------------------------------------------
// 3. Segmentation optimality

/// Every split of `t` atoms into `n` non-empty groups, as group end indices.
fn segmentations(t: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << (t - 1)) {
        if mask.count_ones() as usize != n - 1 {
            continue;
        }
        let mut ends: Vec<usize> = (1..t).filter(|g| mask >> (g - 1) & 1 == 1).collect();
        ends.push(t);
        out.push(ends);
    }
    out
}

fn group(atoms: &[&str], ends: &[usize]) -> Vec<String> {
    let mut start = 0;
    ends.iter()
        .map(|&e| {
            let w = atoms[start..e].join(" ");
            start = e;
            w
        })
        .collect()
}

fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn criterion_3() -> Verdict {
    let vocab = ["a", "b", "a b", "b a", "a a", "a b a", "b b"];
    let mut checked = 0u64;
    for t in 1..=8usize {
        for n in 1..=t {
            let segs = segmentations(t, n);
            ensure!(segs.len() == binom(t - 1, n - 1), "enumerated {} segmentations, expected C({}, {})", segs.len(), t - 1, n - 1);
            for code in 0u32..(1 << t) {
                let atoms: Vec<&str> = (0..t).map(|i| if code >> i & 1 == 1 { "b" } else { "a" }).collect();
                // Three answers per case; the third holds several words per slot.
                let pick = |k: usize| vocab[(code as usize * 7 + k * 3 + t + n) % vocab.len()].to_string();
                let answers: Vec<Vec<String>> = vec![
                    (0..n).map(|j| pick(j)).collect(),
                    (0..n).map(|j| pick(j + 5)).collect(),
                    (0..n).map(|j| if j % 2 == 0 { "a".into() } else { pick(j + 1) }).collect(),
                ];
                // best_grouping against brute force, including tie breaks.
                for y in &answers {
                    let hit = |j: usize, w: &str| y[j] == w;
                    let (words, hits) = best_grouping(&atoms, n, hit);
                    let scored: Vec<(usize, &Vec<usize>)> = segs
                        .iter()
                        .map(|ends| (group(&atoms, ends).iter().enumerate().filter(|(j, w)| hit(*j, w)).count(), ends))
                        .collect();
                    let best = scored.iter().map(|(h, _)| *h).max().unwrap_or(0);
                    ensure!(hits == best, "t={t} n={n} atoms={atoms:?} y={y:?}: dp {hits}, brute force {best}");
                    let chosen = scored
                        .iter()
                        .filter(|(h, _)| *h == best)
                        .map(|(_, ends)| ends.iter().rev().copied().collect::<Vec<_>>())
                        .min()
                        .map(|rev| rev.into_iter().rev().collect::<Vec<_>>())
                        .unwrap_or_default();
                    ensure!(words == group(&atoms, &chosen), "t={t} n={n}: tie broken differently ({words:?})");
                    checked += segs.len() as u64;
                }
                // segment_align: maximum over answers and groupings.
                let text = atoms.join(" ");
                let brute = answers
                    .iter()
                    .flat_map(|y| segs.iter().map(move |ends| (y, ends)))
                    .map(|(y, ends)| group(&atoms, ends).iter().zip(y).filter(|(w, a)| w == a).count() as f64 / n as f64)
                    .fold(0.0, f64::max);
                let got = segment_align(&text, n, &answers, None).accuracy;
                ensure!(got == brute, "segment_align t={t} n={n} `{text}`: {got} vs {brute}");
            }
        }
    }
    Ok(format!("all t <= 8, 1 <= n <= t, 2^t atom strings, 3 answers each; {checked} segmentations scored"))
}

// ---------------------------------------------------------------------------
// 4. Metric fixtures and oracle adaptability

fn s(v: &[&str]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn criterion_4() -> Verdict {
    let set = |v: &[&str]| Answers::Set(s(v));
    let product = |v: &[&[&str]]| Answers::Product(v.iter().map(|slot| s(slot)).collect());
    // (prediction, answers, separator, hand-computed accuracy)
    let fixtures: Vec<(&str, Answers, Option<&str>, f64)> = vec![
        ("happy", set(&["happy"]), None, 1.0),
        ("glad", set(&["happy", "glad"]), None, 1.0),
        ("New York", set(&["New York City"]), None, 2.0 / 3.0),
        ("NYC", set(&["New York City", "NYC"]), None, 1.0),
        ("a b", set(&["a b c", "a x"]), None, 2.0 / 3.0),
        ("a q c d", set(&["a b c d", "x q c y"]), None, 0.75),
        ("", set(&["x"]), None, 0.0),
        ("true", Answers::Bool(true), None, 1.0),
        ("false", Answers::Bool(true), None, 0.0),
        ("b c", product(&[&["a", "b"], &["c"]]), None, 1.0),
        ("x q z", product(&[&["x"], &["y"], &["z"]]), None, 2.0 / 3.0),
        ("Pauline Payne Whitney Charles Lloyd", product(&[&["Pauline Payne Whitney"], &["Charles Lloyd"]]), None, 1.0),
        ("a b", product(&[&["a"], &["b"], &["c"], &["d"]]), None, 0.5),
        ("a b # c", product(&[&["a b"], &["c"]]), Some("#"), 1.0),
        ("a # b c", product(&[&["a b"], &["c"]]), Some("#"), 0.0),
    ];
    for (i, (pred, answers, sep, want)) in fixtures.iter().enumerate() {
        let (got, _) = score_example(pred, answers, *sep);
        ensure!((got - want).abs() < 1e-12, "fixture {i} `{pred}`: {got} vs {want}");
    }

    let paper = paper_stores().map_err(|e| e.to_string())?;
    let toy = toy_stores().map_err(|e| e.to_string())?;
    let cfg = GenerationConfig { train_size: 16, eval_size: 8, min_examples: 2, seed: 11, ..GenerationConfig::default() };
    let mut datasets: Vec<Dataset> = Vec::new();
    let mut build = |stores: &Stores, src: &str| -> Result<(), String> {
        let e = p(src, stores.catalog());
        match build_dataset(stores, &e, &cfg).map_err(|err| err.to_string())? {
            Outcome::Accepted(ds) => {
                if ds.level == taskforge::algebra::Level::Sequence {
                    datasets.push(with_separators(&ds, "#").map_err(|err| err.to_string())?);
                }
                datasets.push(ds);
                Ok(())
            }
            Outcome::Rejected(r) => Err(format!("unexpected rejection {r}")),
        }
    };
    for src in [
        "synonyms[eng]",
        "union(antonyms[eng], entailments[eng])",
        "is-POS-noun",
        "translate[eng->spa]",
        "mother(head-of-state)",
        "lor(is-birthplace-london, is-birthplace-nyc)",
        "map{synonyms[eng]}",
    ] {
        build(&paper, src)?;
    }
    for src in ["map{synonyms[eng]}", "filter{is-POS-noun}", "map-filter{antonyms[eng], is-sentiment-positive}", "hyponyms[eng](synonyms[eng])"] {
        build(&toy, src)?;
    }
    let fe = p("antonyms[eng]", paper.catalog());
    let fh = p("entailments[eng]", paper.catalog());
    match build_balanced_union(&paper, &fe, &fh, &cfg).map_err(|e| e.to_string())? {
        Outcome::Accepted(ds) => datasets.push(ds),
        Outcome::Rejected(r) => return Err(format!("balanced union rejected: {r}")),
    }
    for ds in &datasets {
        let preds = oracle_predictions(ds);
        for which in [Which::Mem, Which::Gen] {
            let r = adaptability(&preds, ds, which).map_err(|e| e.to_string())?;
            ensure!(r.aggregate == 1.0 && r.coverage == 1.0, "oracle scores {} on `{}` ({which})", r.aggregate, ds.task);
        }
    }
    Ok(format!("{} hand-computed fixtures; oracle adapt_mem = adapt_gen = 1.0 on {} datasets", fixtures.len(), datasets.len()))
}

// ---------------------------------------------------------------------------
// 5. Balanced union

fn criterion_5() -> Verdict {
    let stores = paper_stores().map_err(|e| e.to_string())?;
    let cat = stores.catalog();
    let (se, sh) = ("antonyms[eng]", "entailments[eng]");
    let (fe, fh) = (p(se, cat), p(sh, cat));
    let domain = |f: &TaskExpr| -> Result<BTreeSet<String>, String> {
        let mut out = BTreeSet::new();
        for w in stores.universe(&eng()).map_err(|e| e.to_string())? {
            if !eval_expr(&stores, f, &w).map_err(|e| e.to_string())?.into_set().is_empty() {
                out.insert(w);
            }
        }
        Ok(out)
    };
    let (de, dh) = (domain(&fe)?, domain(&fh)?);
    let inter: BTreeSet<String> = de.intersection(&dh).cloned().collect();
    ensure!(!inter.is_empty() && inter.len() < de.len() && inter.len() < dh.len(), "fixture: |I|={} |De|={} |Dh|={}", inter.len(), de.len(), dh.len());

    let mut details = Vec::new();
    for total in [2 * inter.len().min(2), 1000] {
        let cfg = GenerationConfig { train_size: total - total / 3, eval_size: total / 3, min_examples: 1, seed: 5, ..GenerationConfig::default() };
        let ds = match build_balanced_union(&stores, &fe, &fh, &cfg).map_err(|e| e.to_string())? {
            Outcome::Accepted(ds) => ds,
            Outcome::Rejected(r) => return Err(format!("rejected: {r}")),
        };
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut sources: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for ex in &ds.examples {
            let src = ex.label_source.clone().ok_or("example without label source")?;
            *counts.entry(src.clone()).or_default() += 1;
            let x = ex.input[0].clone();
            let member = if src == se { &de } else { &dh };
            ensure!(member.contains(&x), "`{x}` labelled by {src} outside its domain");
            ensure!(sources.entry(x.clone()).or_default().insert(src.clone()), "`{x}` labelled twice by {src}");
            ensure!(ex.answers.contains(&ex.sampled_label), "label not in answers for `{x}`");
        }
        let ce = counts.get(se).copied().unwrap_or(0);
        let ch = counts.get(sh).copied().unwrap_or(0);
        ensure!(ce == ch && ce > 0, "label sources {ce} vs {ch}");
        let used_inter: Vec<&String> = sources.keys().filter(|x| inter.contains(*x)).collect();
        for x in &used_inter {
            ensure!(sources[*x].len() == 2, "intersection input `{x}` has one label");
        }
        let cap = total / 2;
        ensure!(used_inter.len() == inter.len().min(cap), "{} intersection inputs used, expected {}", used_inter.len(), inter.len().min(cap));
        if inter.len() >= cap {
            ensure!(sources.keys().all(|x| inter.contains(x)), "non-intersection input used before the intersection was exhausted");
        }
        details.push(format!("total {total}: {ce}+{ch} labels, {} intersection inputs", used_inter.len()));
    }
    Ok(format!("|I|={} < |De|={}, |Dh|={}; {}", inter.len(), de.len(), dh.len(), details.join("; ")))
}

// ---------------------------------------------------------------------------
// 6. Enumeration scale

fn criterion_6() -> Verdict {
    let cat = Catalog::paper();
    let all = enumerate_depth2(&cat, usize::MAX);
    let canon: BTreeSet<String> = all.iter().map(|e| canonicalize(e).to_string()).collect();
    ensure!(canon.len() == all.len(), "{} tasks but {} distinct canonical forms", all.len(), canon.len());
    ensure!(all.len() >= 500, "only {} tasks", all.len());
    let first = enumerate_depth2(&cat, 500);
    let second = enumerate_depth2(&cat, 500);
    ensure!(first.len() == 500, "truncated to {}", first.len());
    ensure!(first == second, "two runs differ");
    ensure!(first[..] == all[..500], "truncation is not a prefix of the full list");
    Ok(format!("{} distinct canonical tasks, truncated to 500, identical across runs", all.len()))
}

// ---------------------------------------------------------------------------
// 7. Regression

/// Closed-form least squares and squared Pearson correlation.
fn ols(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|(_, y)| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 0.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

fn criterion_7() -> Verdict {
    let tol = 1e-9;
    let mut cases = 0;
    for n in [2usize, 3, 7, 19, 20, 21, 64] {
        for (a, b) in [(0.5, 0.1), (-1.25, 0.8), (2.0, -0.3), (1e-3, 0.5)] {
            let xs: Vec<f64> = (0..n).map(|i| 0.05 + 0.9 * i as f64 / n as f64).collect();
            let exact: Vec<(f64, f64)> = xs.iter().map(|&x| (x, a * x + b)).collect();
            let noisy: Vec<(f64, f64)> = xs.iter().enumerate().map(|(i, &x)| (x, a * x + b + 0.05 * (i as f64 * 1.7).sin())).collect();
            for (pts, label) in [(&exact, "exact"), (&noisy, "noisy")] {
                if label == "noisy" && n < 3 {
                    continue;
                }
                let fit = composition_regression(pts, true).map_err(|e| e.to_string())?;
                let (slope, intercept, r2) = ols(pts);
                ensure!((fit.slope - slope).abs() <= tol, "{label} n={n}: slope {} vs {slope}", fit.slope);
                ensure!((fit.intercept - intercept).abs() <= tol, "{label} n={n}: intercept {} vs {intercept}", fit.intercept);
                ensure!((fit.r2 - r2).abs() <= tol, "{label} n={n}: r2 {} vs {r2}", fit.r2);
                if label == "exact" {
                    ensure!((fit.slope - a).abs() <= tol && (fit.intercept - b).abs() <= tol && (fit.r2 - 1.0).abs() <= tol, "exact n={n}: fit {fit:?}");
                }
                cases += 1;
            }
        }
    }
    for n in 2..=40usize {
        let pts: Vec<(f64, f64)> = (0..n).map(|i| (i as f64, 3.0 * i as f64 - 1.0)).collect();
        let forced = composition_regression(&pts, true).map_err(|e| e.to_string())?;
        ensure!(forced.significant == (n >= MIN_SIGNIFICANT_POINTS), "n={n}: significant={}", forced.significant);
        let plain = composition_regression(&pts, false);
        ensure!(plain.is_ok() == (n >= MIN_SIGNIFICANT_POINTS), "n={n}: unforced fit {}", if plain.is_ok() { "accepted" } else { "refused" });
    }
    Ok(format!("{cases} fits within {tol:e}; significance flag exact for n = 2..40"))
}

// ---------------------------------------------------------------------------
// 8. Determinism of `generate`

fn run_generate(out: &Path, seed: &str, jobs: &str) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_taskforge"))
        .args(["generate", "--fixture", "paper"])
        .args(["--task", "synonyms[eng]", "--task", "lor(is-birthplace-london, is-birthplace-nyc)"])
        .args(["--task", "map{synonyms[eng]}", "--task", "intersection(synonyms[eng], antonyms[eng])"])
        .args(["--balanced-union", "antonyms[eng]", "entailments[eng]"])
        .args(["--seed", seed, "--train-size", "20", "--eval-size", "10", "--min-examples", "2", "--separator", "#"])
        .args(["--jobs", jobs])
        .arg("--out-dir")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(status.status.success(), "generate failed: {}", String::from_utf8_lossy(&status.stderr));
    Ok(())
}

fn snapshot(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let entry = entry.map_err(|e| e.to_string())?;
        out.insert(entry.file_name().to_string_lossy().into_owned(), std::fs::read(entry.path()).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

fn criterion_8() -> Verdict {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dirs: Vec<_> = ["a", "b", "c", "d"].iter().map(|d| tmp.path().join(d)).collect();
    run_generate(&dirs[0], "7", "1")?;
    run_generate(&dirs[1], "7", "1")?;
    run_generate(&dirs[2], "7", "3")?;
    run_generate(&dirs[3], "8", "1")?;
    let a = snapshot(&dirs[0])?;
    ensure!(a.contains_key("manifest.json") && a.len() >= 5, "outputs: {:?}", a.keys().collect::<Vec<_>>());
    ensure!(a == snapshot(&dirs[1])?, "identical runs differ");
    ensure!(a == snapshot(&dirs[2])?, "--jobs changed the output");
    ensure!(a != snapshot(&dirs[3])?, "a different seed gave identical files");
    Ok(format!("{} files byte-identical across reruns and job counts", a.len()))
}

// ---------------------------------------------------------------------------
// 9. Sequence sampler

fn criterion_9() -> Verdict {
    let stores = toy_stores().map_err(|e| e.to_string())?;
    let cat = stores.catalog();
    let lex = stores.lexical().ok_or("no lexical store")?;
    let tasks = [
        "filter{is-POS-noun}",
        "filter{is-sentiment-positive}",
        "map-filter{synonyms[eng], is-POS-verb}",
        "map-filter{antonyms[eng], is-sentiment-positive}",
        "filter{land(is-POS-noun, is-sentiment-positive)}",
        "map{synonyms[eng]}(filter{is-POS-noun})",
    ];
    let mut draws = 0;
    for src in tasks {
        let nf = normalize(&p(src, cat), cat).map_err(|e| e.to_string())?;
        for n in 1..=8usize {
            for m in 1..=n {
                for seed in 0..4u64 {
                    let seq = seq_sample(&stores, &nf, n, m, seed).map_err(|e| e.to_string())?.map_err(|r| format!("`{src}` n={n} m={m}: {r}"))?;
                    ensure!(seq.len() == n, "`{src}`: length {} for n={n}", seq.len());
                    let mut passing = 0;
                    for w in &seq {
                        let pass = eval_expr(&stores, &nf.filter_pred, w).map_err(|e| e.to_string())? == Value::Bool(true);
                        if let TaskExpr::Atomic(name) = &nf.filter_pred {
                            ensure!(pass == lex.predicate(name, w), "`{w}`: filter disagrees with the store");
                        }
                        passing += usize::from(pass);
                    }
                    ensure!(passing == m, "`{src}` n={n} m={m} seed={seed}: {passing} passing words in {seq:?}");
                    let out = eval_seq(&stores, &nf, &seq).map_err(|e| e.to_string())?;
                    ensure!(out.seq_len() == m && !out.is_empty(), "`{src}` n={n} m={m}: output length {}", out.seq_len());
                    draws += 1;
                }
            }
        }
    }
    Ok(format!("{draws} draws over {} tasks, all 0 < m <= n <= 8", tasks.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("normalization soundness", criterion_1),
        ("SPARQL oracle equivalence", criterion_2),
        ("segmentation optimality", criterion_3),
        ("metric fixtures", criterion_4),
        ("balanced union", criterion_5),
        ("enumeration scale", criterion_6),
        ("regression", criterion_7),
        ("determinism", criterion_8),
        ("sequence sampler", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("criterion {}: PASS {name} ({secs:.1}s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({secs:.1}s): {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
