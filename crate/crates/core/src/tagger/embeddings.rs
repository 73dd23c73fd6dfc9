//! Pretrained word-embedding text files: one line per word, the token
//! followed by its vector components, space-separated. An optional first
//! line holding exactly two integers (`count dim`) is skipped.

use super::TaggerError;
use std::collections::HashMap;

pub fn load_embeddings_text(
    text: &str,
    dim: usize,
) -> Result<HashMap<String, Vec<f64>>, TaggerError> {
    let mut map = HashMap::new();
    let mut lines = text.lines().enumerate().peekable();
    if let Some((_, first)) = lines.peek() {
        let fields: Vec<&str> = first.split_whitespace().collect();
        if fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
            lines.next();
        }
    }
    for (lineno, line) in lines {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let word = fields
            .next()
            .ok_or_else(|| TaggerError::EmbeddingFile(format!("line {lineno}: empty")))?;
        let vector: Result<Vec<f64>, _> = fields.map(str::parse::<f64>).collect();
        let vector =
            vector.map_err(|e| TaggerError::EmbeddingFile(format!("line {lineno}: {e}")))?;
        if vector.len() != dim {
            return Err(TaggerError::EmbeddingFile(format!(
                "line {lineno}: expected {dim} components, got {}",
                vector.len()
            )));
        }
        map.insert(word.to_string(), vector);
    }
    Ok(map)
}
