/// Split a sentence on whitespace and punctuation.
///
/// Words are maximal alphanumeric runs; `-` and apostrophes stay inside a
/// word when flanked by alphanumerics ("well-known", "Earth's"), and `.`/`,`
/// stay inside numbers ("3.5"). Every other non-space character is a token
/// of its own.
pub fn tokenize(sentence: &str) -> Vec<String> {
    let chars: Vec<char> = sentence.chars().collect();
    let mut tokens = Vec::new();
    let mut word = String::new();

    for (i, &c) in chars.iter().enumerate() {
        let prev = i.checked_sub(1).map(|j| chars[j]);
        let next = chars.get(i + 1).copied();
        let joins = match c {
            '-' | '\'' | '\u{2019}' => {
                !word.is_empty()
                    && prev.is_some_and(char::is_alphanumeric)
                    && next.is_some_and(char::is_alphanumeric)
            }
            '.' | ',' => {
                !word.is_empty()
                    && prev.is_some_and(|p| p.is_ascii_digit())
                    && next.is_some_and(|n| n.is_ascii_digit())
            }
            _ => false,
        };

        if c.is_alphanumeric() || joins {
            word.push(c);
            continue;
        }
        if !word.is_empty() {
            tokens.push(std::mem::take(&mut word));
        }
        if !c.is_whitespace() {
            tokens.push(c.to_string());
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::tokenize;

    #[test]
    fn splits_punctuation() {
        assert_eq!(tokenize("Sun is a star."), ["Sun", "is", "a", "star", "."]);
        assert_eq!(
            tokenize("The Moon is Earth's only natural satellite, (roughly 3.5 km)"),
            ["The", "Moon", "is", "Earth's", "only", "natural", "satellite", ",", "(", "roughly", "3.5", "km", ")"]
        );
        assert_eq!(tokenize("well-known - thing"), ["well-known", "-", "thing"]);
        assert!(tokenize("   ").is_empty());
    }
}
