//! Per-position accuracy and segmentation alignment.

/// Fraction of the positions of `answer` matched by `pred`.
///
/// Surplus predicted tokens are ignored and missing ones score zero. An
/// empty answer is matched only by an empty prediction.
pub fn position_accuracy<S: AsRef<str>, T: AsRef<str>>(pred: &[S], answer: &[T]) -> f64 {
    if answer.is_empty() {
        return if pred.is_empty() { 1.0 } else { 0.0 };
    }
    let hits = answer.iter().zip(pred).filter(|(a, p)| a.as_ref() == p.as_ref()).count();
    hits as f64 / answer.len() as f64
}

/// Best [`position_accuracy`] over all answers; 0 when there are none.
pub fn token_accuracy<S: AsRef<str>, T: AsRef<str>>(pred: &[S], answers: &[Vec<T>]) -> f64 {
    answers.iter().map(|y| position_accuracy(pred, y)).fold(0.0, f64::max)
}

/// Chosen grouping of the predicted atoms into words, and its score.
#[derive(Clone, Debug, PartialEq)]
pub struct Alignment {
    pub words: Vec<String>,
    pub accuracy: f64,
}

/// Groups `atoms` into `n` contiguous non-empty words maximizing the
/// number of positions `j` with `hit(j, word_j)`. With fewer atoms than
/// words each atom is its own word and the trailing positions are missing.
///
/// Ties resolve to the grouping whose last boundary comes first, then the
/// one before it, and so on.
pub fn best_grouping(atoms: &[&str], n: usize, hit: impl Fn(usize, &str) -> bool) -> (Vec<String>, usize) {
    let t = atoms.len();
    if t <= n {
        let words: Vec<String> = atoms.iter().map(|a| a.to_string()).collect();
        let hits = words.iter().enumerate().filter(|(j, w)| hit(*j, w)).count();
        return (words, hits);
    }
    if n == 0 {
        return (Vec::new(), 0);
    }
    // best[j][i]: most hits placing the first i atoms into j words.
    let mut best = vec![vec![None::<usize>; t + 1]; n + 1];
    let mut back = vec![vec![0usize; t + 1]; n + 1];
    best[0][0] = Some(0);
    for j in 1..=n {
        // Leave at least one atom for each remaining word.
        for i in j..=t - (n - j) {
            for k in (j - 1)..i {
                let Some(prev) = best[j - 1][k] else { continue };
                let cand = prev + usize::from(hit(j - 1, &atoms[k..i].join(" ")));
                if best[j][i].is_none_or(|b| cand > b) {
                    best[j][i] = Some(cand);
                    back[j][i] = k;
                }
            }
        }
    }
    let mut words = vec![String::new(); n];
    let mut i = t;
    for j in (1..=n).rev() {
        let k = back[j][i];
        words[j - 1] = atoms[k..i].join(" ");
        i = k;
    }
    (words, best[n][t].unwrap_or(0))
}

fn atoms(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

/// Words delimited by `sep` when the text contains it.
fn separated(atoms: &[&str], sep: Option<&str>) -> Option<Vec<String>> {
    let sep = sep?;
    if !atoms.contains(&sep) {
        return None;
    }
    Some(atoms.split(|a| *a == sep).map(|g| g.join(" ")).collect())
}

/// Scores raw predicted text against word sequences of `n` words.
///
/// The atoms are grouped into `n` words, by separators when present and
/// otherwise in the way that maximizes accuracy; each answer `y` is scored
/// over its own length.
pub fn segment_align(pred_text: &str, n: usize, answers: &[Vec<String>], separator: Option<&str>) -> Alignment {
    let atoms = atoms(pred_text);
    if let Some(words) = separated(&atoms, separator) {
        let accuracy = token_accuracy(&words, answers);
        return Alignment { words, accuracy };
    }
    let mut best: Option<Alignment> = None;
    for y in answers {
        let (words, hits) = best_grouping(&atoms, n, |j, w| y.get(j).is_some_and(|a| a == w));
        let accuracy = if y.is_empty() { f64::from(u8::from(atoms.is_empty())) } else { hits as f64 / y.len() as f64 };
        if best.as_ref().is_none_or(|b| accuracy > b.accuracy) {
            best = Some(Alignment { words, accuracy });
        }
    }
    best.unwrap_or_else(|| Alignment { words: best_grouping(&atoms, n, |_, _| false).0, accuracy: 0.0 })
}

/// [`segment_align`] against every sequence choosing one word per slot.
///
/// Positions are independent, so the best answer matches a position
/// exactly when the predicted word is anywhere in that slot.
pub fn segment_align_product(pred_text: &str, slots: &[Vec<String>], separator: Option<&str>) -> Alignment {
    let atoms = atoms(pred_text);
    let n = slots.len();
    let hit = |j: usize, w: &str| slots.get(j).is_some_and(|s| s.iter().any(|a| a == w));
    let (words, hits) = match separated(&atoms, separator) {
        Some(words) => {
            let hits = words.iter().enumerate().filter(|(j, w)| hit(*j, w)).count();
            (words, hits)
        }
        None => best_grouping(&atoms, n, hit),
    };
    let accuracy = if n == 0 { f64::from(u8::from(words.is_empty())) } else { hits as f64 / n as f64 };
    Alignment { words, accuracy }
}
