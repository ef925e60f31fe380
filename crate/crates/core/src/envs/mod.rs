//! The two bundled reference environments.
//!
//! Each module provides a scene builder (registered in
//! [`SceneRegistry`](crate::sim::SceneRegistry)), the per-frame update for the
//! entity kind it owns, and a session constructor producing its task and
//! avatar.

pub mod block_settle;
pub mod seek_avoid;

use crate::wire::Settings;

/// Reads an optional integer scalar setting.
fn int_setting(settings: &Settings, key: &str) -> Result<Option<i64>, String> {
    match settings.get(key) {
        None => Ok(None),
        Some(t) => t
            .as_integer()
            .map(Some)
            .ok_or_else(|| format!("{key} must be an integer scalar")),
    }
}

/// First key of `settings` not in `allowed`.
fn unknown_key<'a>(settings: &'a Settings, allowed: &[&str]) -> Option<&'a str> {
    settings
        .keys()
        .map(String::as_str)
        .find(|k| !allowed.contains(k))
}
