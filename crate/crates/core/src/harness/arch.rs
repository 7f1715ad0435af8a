//! Architecture strings such as `400-LRF1600-MP800-10`.
//!
//! The first token is the input width, the last the class count, and each
//! token in between is a layer kind followed by its nominal output size
//! (feature maps times nodes). A `K` suffix multiplies the size by 1024.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LayerKind {
    Fc,
    Lrf,
    Mp,
    Sp,
    Ssp,
}

impl LayerKind {
    pub fn token(self) -> &'static str {
        match self {
            LayerKind::Fc => "FC",
            LayerKind::Lrf => "LRF",
            LayerKind::Mp => "MP",
            LayerKind::Sp => "SP",
            LayerKind::Ssp => "SSP",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerToken {
    pub kind: LayerKind,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input: usize,
    pub layers: Vec<LayerToken>,
    pub classes: usize,
}

fn parse_size(text: &str, position: usize, token: &str) -> Result<usize> {
    let err = |message: &str| Error::Parse {
        position,
        token: token.to_string(),
        message: message.to_string(),
    };
    let (digits, scale) = match text.strip_suffix(['K', 'k']) {
        Some(d) => (d, 1024),
        None => (text, 1),
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(err("expected a positive size"));
    }
    let value: usize = digits.parse().map_err(|_| err("size out of range"))?;
    match value.checked_mul(scale) {
        Some(v) if v > 0 => Ok(v),
        _ => Err(err("expected a positive size")),
    }
}

impl Architecture {
    pub fn parse(s: &str) -> Result<Architecture> {
        let tokens: Vec<&str> = s.trim().split('-').collect();
        if tokens.len() < 2 {
            return Err(Error::Parse {
                position: 0,
                token: s.to_string(),
                message: "need at least an input width and a class count".into(),
            });
        }
        let input = parse_size(tokens[0], 0, tokens[0])?;
        let last = tokens.len() - 1;
        let classes = parse_size(tokens[last], last, tokens[last])?;
        let mut layers = Vec::new();
        for (pos, &tok) in tokens.iter().enumerate().take(last).skip(1) {
            let split = tok.find(|c: char| c.is_ascii_digit()).unwrap_or(tok.len());
            let kind = match tok[..split].to_ascii_uppercase().as_str() {
                "FC" => LayerKind::Fc,
                "LRF" => LayerKind::Lrf,
                "MP" => LayerKind::Mp,
                "SP" => LayerKind::Sp,
                "SSP" => LayerKind::Ssp,
                _ => {
                    return Err(Error::Parse {
                        position: pos,
                        token: tok.to_string(),
                        message: "unknown layer kind (expected FC, LRF, MP, SP or SSP)".into(),
                    })
                }
            };
            layers.push(LayerToken {
                kind,
                size: parse_size(&tok[split..], pos, tok)?,
            });
        }
        Ok(Architecture { input, layers, classes })
    }
}

fn render_size(n: usize) -> String {
    if n >= 1024 && n.is_multiple_of(1024) {
        format!("{}K", n / 1024)
    } else {
        n.to_string()
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.input)?;
        for l in &self.layers {
            write!(f, "-{}{}", l.kind.token(), render_size(l.size))?;
        }
        write!(f, "-{}", self.classes)
    }
}
