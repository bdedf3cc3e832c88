use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use search_game::canonical::to_canonical_string;

/// Output envelope shared by every subcommand.
pub struct RunReport {
    pub command: String,
    pub args: Vec<String>,
    pub digest: Option<String>,
    pub results: Value,
}

pub fn digest(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl RunReport {
    pub fn to_json(&self) -> String {
        to_canonical_string(&json!({
            "command": { "name": self.command, "args": self.args },
            "instance_digest": self.digest,
            "results": self.results,
            "versions": {
                "search-game": search_game::VERSION,
                "search-game-cli": env!("CARGO_PKG_VERSION"),
            },
        }))
    }
}
