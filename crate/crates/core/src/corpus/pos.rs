//! Fallback POS and chunk tagger: a closed-class lexicon plus suffix rules.
//!
//! The relation tagger treats both columns as opaque categorical features, so
//! consistency matters more than accuracy here.

fn closed_class(word: &str) -> Option<&'static str> {
    let tag = match word {
        "a" | "an" | "the" | "this" | "these" | "those" | "every" | "each" | "some" | "any"
        | "no" | "another" | "all" | "both" => "DT",
        "of" | "in" | "on" | "at" | "by" | "for" | "with" | "from" | "into" | "onto" | "about"
        | "as" | "like" | "through" | "over" | "under" | "between" | "among" | "within"
        | "without" | "during" | "around" | "near" | "across" | "against" | "toward"
        | "towards" | "upon" | "via" | "than" | "after" | "before" | "since" | "until"
        | "throughout" | "beyond" | "along" | "behind" | "inside" | "outside" => "IN",
        "to" => "TO",
        "and" | "or" | "but" | "nor" | "yet" | "plus" => "CC",
        "it" | "he" | "she" | "they" | "we" | "i" | "you" | "them" | "him" | "us" | "me" => "PRP",
        "its" | "their" | "his" | "her" | "our" | "my" | "your" => "PRP$",
        "which" | "that" | "whose" => "WDT",
        "who" | "whom" | "what" => "WP",
        "where" | "when" | "how" | "why" => "WRB",
        "is" | "has" | "does" | "contains" | "includes" | "consists" | "comprises" => "VBZ",
        "are" | "have" | "do" | "contain" | "include" | "consist" => "VBP",
        "was" | "were" | "had" | "did" => "VBD",
        "be" => "VB",
        "been" => "VBN",
        "being" => "VBG",
        "can" | "could" | "may" | "might" | "must" | "shall" | "should" | "will" | "would" => "MD",
        "not" | "also" | "very" | "often" | "usually" | "typically" | "generally" | "mainly"
        | "mostly" | "especially" | "commonly" | "primarily" | "only" | "sometimes" | "always"
        | "never" => "RB",
        "there" => "EX",
        "made" | "used" | "called" | "known" | "found" | "composed" => "VBN",
        _ => return None,
    };
    Some(tag)
}

fn punctuation(token: &str) -> Option<&'static str> {
    let tag = match token {
        "," => ",",
        "." | "!" | "?" => ".",
        ":" | ";" => ":",
        "(" | "[" | "{" => "-LRB-",
        ")" | "]" | "}" => "-RRB-",
        "\"" | "'" | "`" => "''",
        _ if token.chars().all(|c| !c.is_alphanumeric()) => "SYM",
        _ => return None,
    };
    Some(tag)
}

fn pos_tag(token: &str, sentence_initial: bool) -> &'static str {
    if let Some(tag) = punctuation(token) {
        return tag;
    }
    let lower = token.to_lowercase();
    if let Some(tag) = closed_class(&lower) {
        return tag;
    }
    if token.chars().next().is_some_and(|c| c.is_ascii_digit()) {
        return "CD";
    }
    if !sentence_initial && token.chars().next().is_some_and(char::is_uppercase) {
        return "NNP";
    }
    let n = lower.chars().count();
    if n > 4 {
        if lower.ends_with("ly") {
            return "RB";
        }
        if lower.ends_with("ing") {
            return "VBG";
        }
        if lower.ends_with("ed") {
            return "VBN";
        }
        const ADJ: [&str; 10] = ["ous", "ful", "ive", "ic", "al", "able", "ible", "less", "ary", "ish"];
        if ADJ.iter().any(|s| lower.ends_with(s)) {
            return "JJ";
        }
    }
    if n > 3 && lower.ends_with('s') && !lower.ends_with("ss") && !lower.ends_with("us") {
        return "NNS";
    }
    "NN"
}

fn chunk_kind(pos: &str) -> Option<&'static str> {
    match pos {
        "DT" | "PRP$" | "JJ" | "NN" | "NNS" | "NNP" | "CD" | "PRP" | "EX" | "WDT" | "WP" => Some("NP"),
        "VBZ" | "VBP" | "VBD" | "VB" | "VBN" | "VBG" | "MD" => Some("VP"),
        "IN" | "TO" => Some("PP"),
        "RB" | "WRB" => Some("ADVP"),
        _ => None,
    }
}

/// POS and chunk tags for a tokenized sentence, one pair per token.
pub fn heuristic_tags<S: AsRef<str>>(tokens: &[S]) -> Vec<(String, String)> {
    let mut out = Vec::with_capacity(tokens.len());
    let mut prev_kind: Option<&str> = None;
    for (i, token) in tokens.iter().enumerate() {
        let pos = pos_tag(token.as_ref(), i == 0);
        let kind = chunk_kind(pos);
        let chunk = match kind {
            None => "O".to_string(),
            Some(k) => {
                // determiners and possessives always open a fresh NP, and
                // prepositions never extend a PP
                let opens = matches!(pos, "DT" | "PRP$" | "IN" | "TO" | "WDT" | "WP");
                if prev_kind == Some(k) && !opens {
                    format!("I-{k}")
                } else {
                    format!("B-{k}")
                }
            }
        };
        prev_kind = kind;
        out.push((pos.to_string(), chunk));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_simple_definition() {
        let tokens = ["Sun", "is", "in", "our", "Solar", "System", "."];
        let tags = heuristic_tags(&tokens);
        let pos: Vec<&str> = tags.iter().map(|(p, _)| p.as_str()).collect();
        let chunk: Vec<&str> = tags.iter().map(|(_, c)| c.as_str()).collect();
        assert_eq!(pos, ["NN", "VBZ", "IN", "PRP$", "NNP", "NNP", "."]);
        assert_eq!(chunk, ["B-NP", "B-VP", "B-PP", "B-NP", "I-NP", "I-NP", "O"]);
    }

    #[test]
    fn suffix_rules() {
        let tags = heuristic_tags(&["x", "quickly", "running", "famous", "stars", "glass", "42"]);
        let pos: Vec<&str> = tags.iter().map(|(p, _)| p.as_str()).collect();
        assert_eq!(pos, ["NN", "RB", "VBG", "JJ", "NNS", "NN", "CD"]);
    }
}
