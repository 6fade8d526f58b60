/// Lowercases, drops punctuation (keeping apostrophes between two alphanumerics, as in
/// `don't`) and splits on whitespace. Punctuation acts as a separator.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().flat_map(char::to_lowercase).collect();
    let mut cleaned = String::with_capacity(chars.len());
    for (i, &c) in chars.iter().enumerate() {
        let keep = if c.is_alphanumeric() {
            true
        } else if c == '\'' || c == '\u{2019}' {
            let before = i > 0 && chars[i - 1].is_alphanumeric();
            let after = chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
            before && after
        } else {
            false
        };
        cleaned.push(if keep {
            if c == '\u{2019}' {
                '\''
            } else {
                c
            }
        } else {
            ' '
        });
    }
    cleaned.split_whitespace().map(str::to_string).collect()
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn basic() {
        assert_eq!(tokenize("The Sky's dark, isn't it?!"), vec!["the", "sky's", "dark", "isn't", "it"]);
        assert_eq!(tokenize("'quoted' well-known"), vec!["quoted", "well", "known"]);
        assert_eq!(tokenize("It\u{2019}s"), vec!["it's"]);
        assert!(tokenize("  ...  ").is_empty());
    }

    proptest! {
        #[test]
        fn idempotent(s in "\\PC{0,60}") {
            let once = tokenize(&s);
            let twice = tokenize(&once.join(" "));
            prop_assert_eq!(once, twice);
        }
    }
}
