use std::collections::HashMap;

/// Unrestricted Damerau-Levenshtein distance over chars: insertions,
/// deletions, substitutions and adjacent transpositions all cost 1.
pub fn damerau_levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (m, n) = (a.len(), b.len());
    if m == 0 {
        return n;
    }
    if n == 0 {
        return m;
    }

    let inf = m + n;
    let width = n + 2;
    let mut d = vec![0usize; (m + 2) * width];
    let at = |i: usize, j: usize| i * width + j;

    d[at(0, 0)] = inf;
    for i in 0..=m {
        d[at(i + 1, 0)] = inf;
        d[at(i + 1, 1)] = i;
    }
    for j in 0..=n {
        d[at(0, j + 1)] = inf;
        d[at(1, j + 1)] = j;
    }

    // last row in which each char of `a` was seen
    let mut last_row: HashMap<char, usize> = HashMap::new();
    for i in 1..=m {
        let mut last_match_col = 0;
        for j in 1..=n {
            let i1 = last_row.get(&b[j - 1]).copied().unwrap_or(0);
            let j1 = last_match_col;
            let cost = if a[i - 1] == b[j - 1] {
                last_match_col = j;
                0
            } else {
                1
            };
            let substitution = d[at(i, j)] + cost;
            let insertion = d[at(i + 1, j)] + 1;
            let deletion = d[at(i, j + 1)] + 1;
            let transposition = d[at(i1, j1)] + (i - i1 - 1) + 1 + (j - j1 - 1);
            d[at(i + 1, j + 1)] = substitution.min(insertion).min(deletion).min(transposition);
        }
        last_row.insert(a[i - 1], i);
    }
    d[at(m + 1, n + 1)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transposition_costs_one() {
        assert_eq!(damerau_levenshtein("fakeusreagent", "fakeuseragent"), 1);
        assert_eq!(damerau_levenshtein("ab", "ba"), 1);
        // unrestricted variant: CA -> ABC is 2, OSA would say 3
        assert_eq!(damerau_levenshtein("ca", "abc"), 2);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(damerau_levenshtein("", ""), 0);
        assert_eq!(damerau_levenshtein("", "abc"), 3);
        assert_eq!(damerau_levenshtein("abc", ""), 3);
        assert_eq!(damerau_levenshtein("pandas", "pandas"), 0);
    }

    proptest::proptest! {
        #[test]
        fn agrees_with_reference_implementation(a in "[abcd]{0,7}", b in "[abcd]{0,7}") {
            proptest::prop_assert_eq!(damerau_levenshtein(&a, &b), strsim::damerau_levenshtein(&a, &b));
        }

        #[test]
        fn symmetric(a in "[a-z-]{0,10}", b in "[a-z-]{0,10}") {
            proptest::prop_assert_eq!(damerau_levenshtein(&a, &b), damerau_levenshtein(&b, &a));
        }
    }
}
