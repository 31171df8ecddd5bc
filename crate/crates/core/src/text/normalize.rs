use std::sync::OnceLock;

use regex::Regex;

use crate::error::{Error, Result};

pub const URL_TOKEN: &str = "<url>";
pub const USER_TOKEN: &str = "<user>";

struct Patterns {
    url: Regex,
    mention: Regex,
    hashtag: Regex,
    pieces: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| Patterns {
        url: Regex::new(r"(?:https?://\S*|\bt\.co/\S*)").unwrap(),
        mention: Regex::new(r"@\w+").unwrap(),
        hashtag: Regex::new(r"#(\w+)").unwrap(),
        pieces: Regex::new(r"<url>|<user>|\w+|[^\w\s]+").unwrap(),
    })
}

/// Lowercases a tweet and rewrites it into space-separated pieces.
///
/// Rules, in order:
/// 1. lowercase (and drop `$`, which is reserved as the trigram word boundary);
/// 2. URLs (`http://`, `https://`, `t.co/`) become `<url>`;
/// 3. `@mentions` become `<user>`;
/// 4. a leading `#` is stripped from hashtags;
/// 5. any character repeated more than three times is cut to three;
/// 6. punctuation runs are split from adjacent words;
/// 7. whitespace collapses to single spaces and the result is trimmed.
pub fn normalize_tweet(text: &str) -> String {
    let p = patterns();
    let lowered: String = text.to_lowercase().chars().filter(|&c| c != '$').collect();
    let s = p.url.replace_all(&lowered, " <url> ");
    let s = p.mention.replace_all(&s, " <user> ");
    let s = p.hashtag.replace_all(&s, "$1");
    let s = squeeze_repeats(&s, 3);
    let pieces: Vec<&str> = p.pieces.find_iter(&s).map(|m| m.as_str()).collect();
    pieces.join(" ")
}

fn squeeze_repeats(s: &str, max_run: usize) -> String {
    let mut out = String::with_capacity(s.len());
    let mut prev = None;
    let mut run = 0;
    for c in s.chars() {
        if Some(c) == prev {
            run += 1;
        } else {
            prev = Some(c);
            run = 1;
        }
        if run <= max_run {
            out.push(c);
        }
    }
    out
}

pub fn tokenize_words(text: &str) -> Vec<String> {
    text.split(' ').filter(|t| !t.is_empty()).map(str::to_string).collect()
}

/// `$`-padded character trigrams of a single word: `ram` gives `$ra`, `ram`, `am$`.
pub fn char_trigrams(word: &str) -> Result<Vec<String>> {
    if word.is_empty() {
        return Err(Error::contract("trigrams of an empty word"));
    }
    if word.contains('$') {
        return Err(Error::contract(format!(
            "word `{word}` contains the reserved delimiter `$`"
        )));
    }
    let padded: Vec<char> = std::iter::once('$')
        .chain(word.chars())
        .chain(std::iter::once('$'))
        .collect();
    Ok(padded.windows(3).map(|w| w.iter().collect()).collect())
}

/// Placeholder tokens such as `<url>` stay whole in the trigram stream.
pub fn is_atomic(token: &str) -> bool {
    token.len() >= 2 && token.starts_with('<') && token.ends_with('>')
}

/// Per-word trigrams of a normalized tweet, concatenated in word order.
pub fn tweet_to_trigram_sequence(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in tokenize_words(text) {
        if is_atomic(&word) {
            out.push(word);
            continue;
        }
        match char_trigrams(&word) {
            Ok(tri) => out.extend(tri),
            // a stray `$` in un-normalized input: drop the delimiter and retry
            Err(_) => {
                let clean: String = word.chars().filter(|&c| c != '$').collect();
                if let Ok(tri) = char_trigrams(&clean) {
                    out.extend(tri);
                }
            }
        }
    }
    out
}
