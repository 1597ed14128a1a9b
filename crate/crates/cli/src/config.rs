//! `key = value` config files. Each key names a long flag of the chosen
//! subcommand; flags given on the command line win. `#` starts a comment.

use std::ffi::OsString;
use std::fs;

use anyhow::{bail, Context};

pub fn parse(text: &str) -> anyhow::Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() || line.starts_with('[') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else { bail!("line {}: expected key = value", i + 1) };
        let k = k.trim().replace('_', "-");
        let v = v.trim().trim_matches('"').to_string();
        if k.is_empty() {
            bail!("line {}: empty key", i + 1);
        }
        out.push((k, v));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// Appends flags from the config file that the command line does not set.
/// Keys unknown to the chosen subcommand are ignored, so one file can serve
/// several subcommands.
pub fn expand_args(mut args: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else { return Ok(args) };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {}", path.to_string_lossy()))?;
    let entries = parse(&text)?;
    let cmd = crate::command();
    let Some(sub) = args.iter().skip(1).find_map(|a| cmd.find_subcommand(a.to_string_lossy().as_ref()).cloned()) else {
        return Ok(args);
    };
    let given: Vec<String> = args
        .iter()
        .filter_map(|a| a.to_str()?.strip_prefix("--").map(|s| s.split('=').next().unwrap_or(s).to_string()))
        .collect();
    for (k, v) in entries {
        if given.contains(&k) {
            continue;
        }
        let known = sub.get_arguments().chain(cmd.get_arguments()).find(|a| a.get_long() == Some(k.as_str()));
        let Some(arg) = known else { continue };
        let is_flag = matches!(arg.get_action(), clap::ArgAction::SetTrue | clap::ArgAction::SetFalse);
        if is_flag {
            if v == "true" {
                args.push(format!("--{k}").into());
            }
            continue;
        }
        args.push(format!("--{k}").into());
        // Multi-value flags such as `robot = d.pddl p.pddl`.
        args.extend(v.split_whitespace().map(OsString::from));
    }
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let got = parse("# defaults\nmode = penalty\ntime_limit=30 # seconds\n\n[solve]\nexpl-cost = \"2\"\n").unwrap();
        assert_eq!(
            got,
            vec![("mode".into(), "penalty".into()), ("time-limit".into(), "30".into()), ("expl-cost".into(), "2".into())]
        );
        assert!(parse("oops").is_err());
    }
}
