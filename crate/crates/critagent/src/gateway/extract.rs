//! Plain-text extraction from HTML pages. This is a pragmatic boilerplate
//! stripper, not a browser: it drops script/style/head subtrees, prefers the
//! `<main>`/`<article>` region when one exists, inserts line breaks at block
//! boundaries and decodes the handful of entities that matter in prose.

/// Tags whose entire content is noise for advice extraction.
const SKIP_SUBTREE: [&str; 8] = [
    "script", "style", "noscript", "svg", "head", "iframe", "template", "canvas",
];

/// Tags that imply a line break around their content.
const BLOCK_TAGS: [&str; 18] = [
    "p", "div", "li", "ul", "ol", "br", "h1", "h2", "h3", "h4", "h5", "h6", "tr", "section",
    "article", "blockquote", "header", "footer",
];

pub fn extract_title(html: &str) -> Option<String> {
    let lowered = html.to_ascii_lowercase();
    let open = lowered.find("<title")?;
    let start = lowered[open..].find('>')? + open + 1;
    let end = lowered[start..].find("</title")? + start;
    let title = collapse_whitespace(&decode_entities(&html[start..end]));
    if title.is_empty() {
        None
    } else {
        Some(title)
    }
}

/// Extracts readable text. When a `<main>` or `<article>` region exists, only
/// that region is used; otherwise the whole document is walked.
pub fn extract_text(html: &str) -> String {
    let region = find_region(html, "main")
        .or_else(|| find_region(html, "article"))
        .unwrap_or(html);
    let raw = strip_tags(region);
    normalize_lines(&raw)
}

fn find_region<'a>(html: &'a str, tag: &str) -> Option<&'a str> {
    let lowered = html.to_ascii_lowercase();
    let open_pat = format!("<{tag}");
    let close_pat = format!("</{tag}");
    let open = lowered.find(&open_pat)?;
    // Require a real tag boundary, not a prefix like <maintenance>.
    let after = lowered.as_bytes().get(open + open_pat.len())?;
    if !matches!(after, b' ' | b'>' | b'\t' | b'\n' | b'/') {
        return None;
    }
    let body_start = lowered[open..].find('>')? + open + 1;
    let close = lowered[body_start..].find(&close_pat)? + body_start;
    Some(&html[body_start..close])
}

fn strip_tags(html: &str) -> String {
    let mut out = String::with_capacity(html.len() / 2);
    let bytes = html.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'<' {
            // Comments: <!-- ... -->
            if html[i..].starts_with("<!--") {
                match html[i..].find("-->") {
                    Some(end) => {
                        i += end + 3;
                        continue;
                    }
                    None => break,
                }
            }
            let tag_end = match html[i..].find('>') {
                Some(e) => i + e + 1,
                None => break,
            };
            let tag_body = &html[i + 1..tag_end - 1];
            let name: String = tag_body
                .trim_start_matches('/')
                .chars()
                .take_while(|c| c.is_ascii_alphanumeric())
                .collect::<String>()
                .to_ascii_lowercase();
            if !tag_body.starts_with('/') && SKIP_SUBTREE.contains(&name.as_str()) {
                let close = format!("</{name}");
                let lowered_rest = html[tag_end..].to_ascii_lowercase();
                match lowered_rest.find(&close) {
                    Some(rel) => {
                        let close_at = tag_end + rel;
                        let skip_to = match html[close_at..].find('>') {
                            Some(e) => close_at + e + 1,
                            None => html.len(),
                        };
                        i = skip_to;
                        continue;
                    }
                    None => {
                        i = html.len();
                        continue;
                    }
                }
            }
            if BLOCK_TAGS.contains(&name.as_str()) {
                out.push('\n');
            } else {
                out.push(' ');
            }
            i = tag_end;
        } else {
            let ch = html[i..].chars().next().unwrap();
            out.push(ch);
            i += ch.len_utf8();
        }
    }
    decode_entities(&out)
}

fn decode_entities(text: &str) -> String {
    text.replace("&nbsp;", " ")
        .replace("&amp;", "&")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&apos;", "'")
        .replace("&rsquo;", "'")
        .replace("&lsquo;", "'")
        .replace("&rdquo;", "\"")
        .replace("&ldquo;", "\"")
        .replace("&mdash;", "—")
        .replace("&ndash;", "–")
        .replace("&hellip;", "…")
}

fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn normalize_lines(text: &str) -> String {
    text.lines()
        .map(collapse_whitespace)
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_scripts_and_styles() {
        let html = "<html><head><style>.x{color:red}</style></head>\
                    <body><script>var x=1;</script><p>Keep this advice.</p></body></html>";
        assert_eq!(extract_text(html), "Keep this advice.");
    }

    #[test]
    fn prefers_article_region() {
        let html = "<body><nav>Home | About</nav><article><p>Use short sentences.</p>\
                    <p>Vary the rhythm.</p></article><footer>© example</footer></body>";
        assert_eq!(extract_text(html), "Use short sentences.\nVary the rhythm.");
    }

    #[test]
    fn block_tags_become_line_breaks() {
        let html = "<ul><li>First tip</li><li>Second tip</li></ul>";
        assert_eq!(extract_text(html), "First tip\nSecond tip");
    }

    #[test]
    fn decodes_common_entities() {
        let html = "<p>Show &amp; tell &mdash; don&#39;t just tell.</p>";
        assert_eq!(extract_text(html), "Show & tell — don't just tell.");
    }

    #[test]
    fn title_extraction() {
        let html = "<html><head><title> How to Write Fight   Scenes </title></head></html>";
        assert_eq!(extract_title(html).as_deref(), Some("How to Write Fight Scenes"));
        assert_eq!(extract_title("<p>no title</p>"), None);
    }

    #[test]
    fn survives_unclosed_and_garbage_markup() {
        let html = "<p>real text <b>bold";
        assert_eq!(extract_text(html), "real text bold");
        assert_eq!(extract_text("<script>never closed"), "");
    }

    #[test]
    fn comments_are_dropped() {
        let html = "<p>before</p><!-- hidden --><p>after</p>";
        assert_eq!(extract_text(html), "before\nafter");
    }
}
