//! Robust decoding of structured content from free-form model output. Models
//! pad their answers with reasoning, markdown fences and echoes of the prompt,
//! so every parser here tolerates surrounding noise and pins down exactly one
//! disambiguation rule (usually "last occurrence wins").

use crate::error::ParseError;

const VERDICT_MARKER: &str = "therefore, the answer is";

/// Finds the last occurrence of "therefore, the answer is yes/no"
/// (case-insensitive, tolerant of trailing punctuation and markdown around the
/// verdict word). Earlier occurrences are fallbacks when the last one does not
/// resolve to yes or no.
pub fn parse_binary_verdict(text: &str) -> Result<bool, ParseError> {
    let lowered = text.to_lowercase();
    let mut positions: Vec<usize> = Vec::new();
    let mut from = 0;
    while let Some(idx) = lowered[from..].find(VERDICT_MARKER) {
        positions.push(from + idx);
        from += idx + VERDICT_MARKER.len();
    }
    for pos in positions.into_iter().rev() {
        let tail = &lowered[pos + VERDICT_MARKER.len()..];
        let word: String = tail
            .chars()
            .skip_while(|c| !c.is_ascii_alphabetic())
            .take_while(|c| c.is_ascii_alphabetic())
            .collect();
        match word.as_str() {
            "yes" => return Ok(true),
            "no" => return Ok(false),
            _ => continue,
        }
    }
    Err(ParseError::MarkerAbsent)
}

/// Extracts the last integer anywhere in the text and range-checks it. A
/// minus sign directly before the digits is honored.
pub fn parse_trailing_score(text: &str, lo: i64, hi: i64) -> Result<i64, ParseError> {
    let bytes = text.as_bytes();
    let mut end = None;
    for i in (0..bytes.len()).rev() {
        if bytes[i].is_ascii_digit() {
            end = Some(i + 1);
            break;
        }
    }
    let end = end.ok_or(ParseError::NoIntegerFound)?;
    let mut start = end;
    while start > 0 && bytes[start - 1].is_ascii_digit() {
        start -= 1;
    }
    let mut signed_start = start;
    if start > 0 && bytes[start - 1] == b'-' && (start < 2 || !bytes[start - 2].is_ascii_digit()) {
        signed_start -= 1;
    }
    // Parse through i128 so absurdly long digit runs still report out-of-range
    // instead of a parse failure. The slice holds only digits (plus an
    // optional sign), so even an i128 parse error can only mean overflow.
    let raw = &text[signed_start..end];
    let value: i128 = match raw.parse() {
        Ok(value) => value,
        Err(_) => {
            let clamped = if raw.starts_with('-') { i64::MIN } else { i64::MAX };
            return Err(ParseError::OutOfRange { value: clamped, lo, hi });
        }
    };
    if value < lo as i128 || value > hi as i128 {
        let clamped = value.clamp(i64::MIN as i128, i64::MAX as i128) as i64;
        return Err(ParseError::OutOfRange { value: clamped, lo, hi });
    }
    Ok(value as i64)
}

/// Parses a numbered list: one entry per line beginning with an integer
/// marker ("1.", "2)", "3:", "4 -"). The marker and its punctuation are
/// stripped; blank and non-matching lines are skipped.
pub fn parse_numbered_list(text: &str) -> Result<Vec<String>, ParseError> {
    let mut entries = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(entry) = strip_numbered_marker(trimmed) {
            if !entry.is_empty() {
                entries.push(entry.to_string());
            }
        }
    }
    if entries.is_empty() {
        return Err(ParseError::EmptyList);
    }
    Ok(entries)
}

fn strip_numbered_marker(line: &str) -> Option<&str> {
    let digits = line.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits == 0 {
        return None;
    }
    let rest = &line[digits..];
    let rest = rest.trim_start_matches(|c: char| matches!(c, '.' | ')' | ':' | '-') || c.is_whitespace());
    Some(rest.trim())
}

/// Tolerant list reader for replies that may be numbered, bulleted or plain
/// lines. Separator-only lines are dropped. Never errors; callers decide what
/// an empty result means.
pub fn parse_advice_lines(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.chars().all(|c| !c.is_alphanumeric()) {
            continue;
        }
        let entry = match strip_numbered_marker(trimmed) {
            Some(e) => e,
            None => trimmed
                .trim_start_matches(['-', '*', '•', '–'])
                .trim(),
        };
        if !entry.is_empty() {
            out.push(entry.to_string());
        }
    }
    out
}

/// Extracts the outermost JSON object from the text (markdown fences and
/// surrounding prose are ignored) and flattens it into ordered key/value
/// string pairs. Non-string scalar values are rendered with their JSON
/// spelling; nested arrays/objects keep their compact JSON text.
pub fn parse_json_object(text: &str) -> Result<Vec<(String, String)>, ParseError> {
    let mut saw_candidate = false;
    let mut last_err: Option<String> = None;
    let mut search_from = 0;
    while let Some(rel) = text[search_from..].find('{') {
        let start = search_from + rel;
        match balanced_object_end(&text[start..]) {
            Some(len) => {
                saw_candidate = true;
                let candidate = &text[start..start + len];
                match serde_json::from_str::<serde_json::Map<String, serde_json::Value>>(candidate)
                {
                    Ok(map) => {
                        let pairs = map
                            .into_iter()
                            .map(|(k, v)| (k, value_to_string(v)))
                            .collect();
                        return Ok(pairs);
                    }
                    Err(e) => {
                        last_err = Some(e.to_string());
                        search_from = start + 1;
                    }
                }
            }
            None => {
                search_from = start + 1;
            }
        }
    }
    if saw_candidate {
        Err(ParseError::MalformedJson(
            last_err.unwrap_or_else(|| "unparseable object".into()),
        ))
    } else {
        Err(ParseError::NoJsonFound)
    }
}

fn value_to_string(v: serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s,
        other => other.to_string(),
    }
}

/// Length in bytes of the brace-balanced region starting at `text[0] == '{'`,
/// respecting JSON string literals and escapes. `None` when unbalanced.
fn balanced_object_end(text: &str) -> Option<usize> {
    let bytes = text.as_bytes();
    debug_assert_eq!(bytes.first(), Some(&b'{'));
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate() {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

const APPLIES_YES: &str = "the criteria applies yes";
const APPLIES_NO: &str = "does not apply";

/// Reads the keep/drop verdict out of one filter reasoning string. `None`
/// when neither marker is present; the last marker wins when both appear.
pub fn parse_applies_verdict(reasoning: &str) -> Option<bool> {
    let lowered = reasoning.to_lowercase();
    let yes = lowered.rfind(APPLIES_YES);
    let no = lowered.rfind(APPLIES_NO);
    match (yes, no) {
        (Some(y), Some(n)) => Some(y > n),
        (Some(_), None) => Some(true),
        (None, Some(_)) => Some(false),
        (None, None) => None,
    }
}

/// True when a document-grounded answer is the literal "no answer" refusal
/// (any casing, surrounding quotes/punctuation ignored).
pub fn is_no_answer(reply: &str) -> bool {
    let normalized: String = reply
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    normalized.split_whitespace().collect::<Vec<_>>() == ["no", "answer"]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_last_occurrence_wins() {
        let text = "Maybe. Therefore, the answer is no. On reflection... therefore, the answer is yes!";
        assert_eq!(parse_binary_verdict(text), Ok(true));
    }

    #[test]
    fn verdict_tolerates_markdown_and_punctuation() {
        assert_eq!(parse_binary_verdict("Therefore, the answer is **yes**."), Ok(true));
        assert_eq!(parse_binary_verdict("THEREFORE, THE ANSWER IS NO!!"), Ok(false));
    }

    #[test]
    fn verdict_ignores_non_answer_words_and_falls_back() {
        // The last marker resolves to a non-answer word; the earlier one counts.
        let text = "therefore, the answer is no. But therefore, the answer is unclear";
        assert_eq!(parse_binary_verdict(text), Ok(false));
        assert_eq!(
            parse_binary_verdict("there is no marker here"),
            Err(ParseError::MarkerAbsent)
        );
    }

    #[test]
    fn verdict_word_must_match_exactly() {
        // "yesterday" must not read as "yes".
        assert_eq!(
            parse_binary_verdict("therefore, the answer is yesterday"),
            Err(ParseError::MarkerAbsent)
        );
    }

    #[test]
    fn trailing_score_takes_last_integer() {
        assert_eq!(parse_trailing_score("I rate this 3, no wait... score is 7", 0, 10), Ok(7));
        assert_eq!(parse_trailing_score("therefore, the score is: 10.", 0, 10), Ok(10));
    }

    #[test]
    fn trailing_score_range_checked() {
        assert_eq!(
            parse_trailing_score("the score is 11", 0, 10),
            Err(ParseError::OutOfRange { value: 11, lo: 0, hi: 10 })
        );
        assert_eq!(
            parse_trailing_score("score: -1", 0, 10),
            Err(ParseError::OutOfRange { value: -1, lo: 0, hi: 10 })
        );
        assert_eq!(parse_trailing_score("no digits here", 0, 10), Err(ParseError::NoIntegerFound));
    }

    #[test]
    fn trailing_score_huge_digit_run_is_out_of_range() {
        let text = format!("score {}", "9".repeat(40));
        assert!(matches!(
            parse_trailing_score(&text, 0, 10),
            Err(ParseError::OutOfRange { .. })
        ));
    }

    #[test]
    fn numbered_list_strips_markers_and_blanks() {
        let text = "Here you go:\n\n1. first point\n2) second point\n\n3: third\n4 - fourth\n";
        assert_eq!(
            parse_numbered_list(text).unwrap(),
            ["first point", "second point", "third", "fourth"]
        );
    }

    #[test]
    fn numbered_list_requires_at_least_one_entry() {
        assert_eq!(parse_numbered_list("no markers here\njust prose"), Err(ParseError::EmptyList));
    }

    #[test]
    fn advice_lines_accept_bullets_numbers_and_plain_text() {
        let text = "- bullet one\n* bullet two\n1. numbered\nplain line\n---\n\n";
        assert_eq!(
            parse_advice_lines(text),
            ["bullet one", "bullet two", "numbered", "plain line"]
        );
    }

    #[test]
    fn json_object_survives_fences_and_prose() {
        let text = "Sure! Here's the JSON:\n```json\n{\"how to write\": \"structure tips\", \"n\": 3}\n```\nHope that helps.";
        let pairs = parse_json_object(text).unwrap();
        assert_eq!(
            pairs,
            vec![
                ("how to write".to_string(), "structure tips".to_string()),
                ("n".to_string(), "3".to_string())
            ]
        );
    }

    #[test]
    fn json_object_preserves_key_order() {
        let pairs = parse_json_object("{\"z\": \"1\", \"a\": \"2\", \"m\": \"3\"}").unwrap();
        let keys: Vec<_> = pairs.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(keys, ["z", "a", "m"]);
    }

    #[test]
    fn json_object_handles_braces_inside_strings() {
        let pairs = parse_json_object("{\"k\": \"value with } brace and \\\" quote\"}").unwrap();
        assert_eq!(pairs[0].1, "value with } brace and \" quote");
    }

    #[test]
    fn json_object_distinguishes_missing_from_malformed() {
        assert_eq!(parse_json_object("no braces at all"), Err(ParseError::NoJsonFound));
        assert!(matches!(
            parse_json_object("{\"unterminated\": "),
            Err(ParseError::NoJsonFound) // unbalanced: no complete object found
        ));
        assert!(matches!(
            parse_json_object("{bad json}"),
            Err(ParseError::MalformedJson(_))
        ));
    }

    #[test]
    fn json_object_skips_leading_garbage_object() {
        // The first balanced candidate is malformed; a later one parses.
        let text = "{oops} then {\"k\": \"v\"}";
        let pairs = parse_json_object(text).unwrap();
        assert_eq!(pairs, vec![("k".to_string(), "v".to_string())]);
    }

    #[test]
    fn applies_verdict_markers() {
        assert_eq!(parse_applies_verdict("...therefore, the criteria applies yes"), Some(true));
        assert_eq!(
            parse_applies_verdict("...therefore, the criteria does not apply no"),
            Some(false)
        );
        assert_eq!(parse_applies_verdict("no marker"), None);
    }

    #[test]
    fn no_answer_detection_is_tolerant() {
        assert!(is_no_answer("no answer"));
        assert!(is_no_answer("\"No Answer\"."));
        assert!(is_no_answer("``no answer''"));
        assert!(!is_no_answer("there is no answer to be found in this article"));
        assert!(!is_no_answer("answer: no"));
    }
}
