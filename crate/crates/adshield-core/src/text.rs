//! Deterministic tokenization and sentence segmentation.
//!
//! Tokens keep byte offsets into the original string so token-level tags can
//! be mapped back to response spans. Sentence splitting is deliberately
//! naive (no abbreviation lexicon): it only has to be consistent between
//! training and inference, not linguistically perfect.

/// A single token with its byte span in the source text.
///
/// `source[start..end]` always equals `text`; tokens are non-overlapping and
/// ordered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.text
    }
}

/// A half-open `[token_start, token_end)` range of token indices forming one
/// sentence. Spans partition the token sequence and are never empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SentenceSpan {
    pub token_start: usize,
    pub token_end: usize,
}

impl SentenceSpan {
    pub fn len(&self) -> usize {
        self.token_end - self.token_start
    }

    pub fn is_empty(&self) -> bool {
        self.token_end == self.token_start
    }
}

// Punctuation that gets separated from the edges of a whitespace chunk.
// ASCII punctuation plus the handful of typographic marks that show up in
// LLM output.
fn is_edge_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2026}' // …
            | '\u{2014}' // —
            | '\u{2013}' // –
            | '\u{201C}' // “
            | '\u{201D}' // ”
            | '\u{2018}' // ‘
            | '\u{2019}' // ’
            | '\u{00AB}' // «
            | '\u{00BB}' // »
        )
}

fn is_sentence_final(s: &str) -> bool {
    matches!(s, "." | "!" | "?" | "\u{2026}")
}

fn is_closing(s: &str) -> bool {
    matches!(
        s,
        "\"" | "'" | ")" | "]" | "}" | "\u{201D}" | "\u{2019}" | "\u{00BB}"
    )
}

/// Split `text` on Unicode whitespace, then separate leading and trailing
/// punctuation characters into their own tokens.
///
/// Deterministic; concatenating the token texts with the original gaps
/// reconstructs the input. Empty input yields an empty list.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut chunk_start: Option<usize> = None;

    let flush = |start: usize, end: usize, tokens: &mut Vec<Token>| {
        let chunk = &text[start..end];
        let mut s = start;
        let mut e = end;
        // Leading punctuation, one token per character.
        for c in chunk.chars() {
            if !is_edge_punct(c) {
                break;
            }
            tokens.push(Token {
                text: c.to_string(),
                start: s,
                end: s + c.len_utf8(),
            });
            s += c.len_utf8();
        }
        // Trailing punctuation, collected inside-out then emitted in order.
        let mut trailing = Vec::new();
        for c in text[s..e].chars().rev() {
            if !is_edge_punct(c) {
                break;
            }
            trailing.push(c);
            e -= c.len_utf8();
        }
        if e > s {
            tokens.push(Token {
                text: text[s..e].to_string(),
                start: s,
                end: e,
            });
        }
        let mut pos = e;
        for c in trailing.into_iter().rev() {
            tokens.push(Token {
                text: c.to_string(),
                start: pos,
                end: pos + c.len_utf8(),
            });
            pos += c.len_utf8();
        }
    };

    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(start) = chunk_start.take() {
                flush(start, i, &mut tokens);
            }
        } else if chunk_start.is_none() {
            chunk_start = Some(i);
        }
    }
    if let Some(start) = chunk_start {
        flush(start, text.len(), &mut tokens);
    }
    tokens
}

/// Partition a token sequence into sentences.
///
/// A boundary is placed after sentence-final punctuation (`.`, `!`, `?`, `…`)
/// optionally followed by closing quotes or brackets; any trailing tokens
/// form a final sentence.
pub fn split_sentences<S: AsRef<str>>(tokens: &[S]) -> Vec<SentenceSpan> {
    let mut spans = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < tokens.len() {
        if is_sentence_final(tokens[i].as_ref()) {
            // Absorb a run of final punctuation ("?!", "...") and closers.
            let mut j = i + 1;
            while j < tokens.len()
                && (is_sentence_final(tokens[j].as_ref()) || is_closing(tokens[j].as_ref()))
            {
                j += 1;
            }
            spans.push(SentenceSpan {
                token_start: start,
                token_end: j,
            });
            start = j;
            i = j;
        } else {
            i += 1;
        }
    }
    if start < tokens.len() {
        spans.push(SentenceSpan {
            token_start: start,
            token_end: tokens.len(),
        });
    }
    spans
}

fn attaches_left(s: &str) -> bool {
    matches!(
        s,
        "." | ","
            | "!"
            | "?"
            | ";"
            | ":"
            | ")"
            | "]"
            | "}"
            | "'"
            | "\u{2026}"
            | "\u{201D}"
            | "\u{2019}"
            | "\u{00BB}"
    )
}

fn attaches_right(s: &str) -> bool {
    matches!(s, "(" | "[" | "{" | "\u{201C}" | "\u{2018}" | "\u{00AB}")
}

/// Join token texts back into readable text: closing punctuation attaches to
/// the previous token, opening punctuation to the next one. This is the
/// inverse used when a response has to be rebuilt from a token subset.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    let mut glue_next = false;
    for token in tokens {
        let token = token.as_ref();
        let no_space = out.is_empty() || glue_next || attaches_left(token);
        if !no_space {
            out.push(' ');
        }
        out.push_str(token);
        glue_next = attaches_right(token);
    }
    out
}
