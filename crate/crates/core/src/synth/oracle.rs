//! Slow reference implementations for cross-checking the production code.
//! Nothing here calls into the metrics, annotate or downstream modules.

/// Plain AUC by counting every (positive, negative) pair; ties count half.
/// `labels[i]` is true for a correctly pronounced (positive) item.
pub fn oracle_pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &sp) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sn) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            pairs += 1.0;
            if sp > sn {
                wins += 1.0;
            } else if sp == sn {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Tries every observed score and +inf as the threshold (accept when
/// `score >= thr`) and returns the cheapest `(thr, FPR + 2 FNR)`; ties go to
/// the lowest threshold.
pub fn oracle_sweep_min_cost(scores: &[f64], labels: &[bool]) -> (f64, f64) {
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    let mut candidates: Vec<f64> = scores.to_vec();
    candidates.push(f64::INFINITY);
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();
    let mut best = (f64::NAN, f64::INFINITY);
    for &thr in &candidates {
        let mut false_pos = 0;
        let mut false_neg = 0;
        for (k, &s) in scores.iter().enumerate() {
            if labels[k] && s < thr {
                false_neg += 1;
            }
            if !labels[k] && s >= thr {
                false_pos += 1;
            }
        }
        let c = false_pos as f64 / n_neg as f64 + 2.0 * (false_neg as f64 / n_pos as f64);
        if c < best.1 {
            best = (thr, c);
        }
    }
    best
}

/// Central finite differences of `f` at `params`.
pub fn oracle_fd_gradient(f: impl Fn(&[f64]) -> f64, params: &[f64], h: f64) -> Vec<f64> {
    let mut x = params.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let up = f(&x);
            x[i] = orig - h;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Best global alignment score by searching every monotone pairing of the
/// two sequences. Unpaired items on either side cost `gap` each.
///
/// Branches whose optimistic bound cannot beat the best complete pairing
/// found so far are cut, so the result is the exact optimum; the search is
/// still exponential in the worst case.
pub fn oracle_align_score(n: usize, m: usize, sim: &dyn Fn(usize, usize) -> f64, gap: f64) -> f64 {
    struct Search<'a> {
        n: usize,
        m: usize,
        sim: &'a dyn Fn(usize, usize) -> f64,
        gap: f64,
        // best similarity available to target rows i.. (any column)
        suffix_max: Vec<f64>,
        best: f64,
    }

    impl Search<'_> {
        fn bound(&self, i: usize, j: usize) -> f64 {
            let (a, b) = (self.n - i, self.m - j);
            let none_paired = -self.gap * (a + b) as f64;
            if a.min(b) == 0 {
                return none_paired;
            }
            let k = a.min(b) as f64;
            none_paired.max(none_paired + k * (self.suffix_max[i] + 2.0 * self.gap))
        }

        fn go(&mut self, i: usize, j: usize, acc: f64) {
            if i == self.n {
                let total = acc - self.gap * (self.m - j) as f64;
                if total > self.best {
                    self.best = total;
                }
                return;
            }
            if acc + self.bound(i, j) <= self.best {
                return;
            }
            // target i paired with j2, skipping annotation items j..j2
            for j2 in j..self.m {
                let here = acc + (self.sim)(i, j2) - self.gap * (j2 - j) as f64;
                self.go(i + 1, j2 + 1, here);
            }
            // target i left unpaired
            self.go(i + 1, j, acc - self.gap);
        }
    }

    let mut suffix_max = vec![f64::NEG_INFINITY; n + 1];
    for i in (0..n).rev() {
        let row = (0..m).map(|j| sim(i, j)).fold(f64::NEG_INFINITY, f64::max);
        suffix_max[i] = suffix_max[i + 1].max(row);
    }
    let mut search = Search {
        n,
        m,
        sim,
        gap,
        suffix_max,
        best: f64::NEG_INFINITY,
    };
    search.go(0, 0, 0.0);
    search.best
}
