//! `key=value` experiment files, expanded into ordinary flags before parsing.
//!
//! Keys are the long flag names (`N`, `tau0`, `out-dir`, ...) of the selected
//! subcommand or the global flags; `command` names the subcommand, e.g.
//! `command = hhg probe`. Flags given on the command line take precedence.
//! Unknown keys are rejected.

use clap::{ArgAction, CommandFactory};

use crate::Cli;

struct Entry {
    key: String,
    value: String,
    line: usize,
}

fn parse(text: &str) -> Result<Vec<Entry>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("config line {}: expected key=value", i + 1))?;
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(format!("config line {}: empty key", i + 1));
        }
        out.push(Entry { key, value: v.trim().to_string(), line: i + 1 });
    }
    Ok(out)
}

fn take_config_path(args: &mut Vec<String>) -> Result<Option<String>, String> {
    for i in 0..args.len() {
        if args[i] == "--config" {
            if i + 1 >= args.len() {
                return Err("--config needs a path".into());
            }
            let p = args.remove(i + 1);
            args.remove(i);
            return Ok(Some(p));
        }
        if let Some(p) = args[i].strip_prefix("--config=") {
            let p = p.to_string();
            args.remove(i);
            return Ok(Some(p));
        }
    }
    Ok(None)
}

fn given_on_command_line(args: &[String], long: &str) -> bool {
    let flag = format!("--{long}");
    args.iter().any(|a| a == &flag || a.starts_with(&format!("{flag}=")))
}

pub fn expand(mut args: Vec<String>) -> Result<Vec<String>, String> {
    let Some(path) = take_config_path(&mut args)? else { return Ok(args) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let entries = parse(&text)?;
    let prog = args.first().cloned().unwrap_or_else(|| "translen".into());
    let rest: Vec<String> = args.into_iter().skip(1).collect();

    let root = Cli::command();
    let top: Vec<String> = root.get_subcommands().map(|c| c.get_name().to_string()).collect();
    // the command comes from the command line when present, else from the file
    let from_cli = rest.iter().position(|a| top.contains(a));
    let mut words: Vec<String> = match from_cli {
        Some(i) => {
            let mut w = vec![rest[i].clone()];
            if let Some(next) = rest.get(i + 1) {
                let sub = root.find_subcommand(&rest[i]).expect("listed");
                if sub.find_subcommand(next).is_some() {
                    w.push(next.clone());
                }
            }
            w
        }
        None => Vec::new(),
    };
    if from_cli.is_none() {
        if let Some(e) = entries.iter().find(|e| e.key == "command") {
            words = e.value.split_whitespace().map(str::to_string).collect();
        }
    }
    if words.is_empty() {
        return Err("config has no `command` and none was given".into());
    }
    let mut cmd = &root;
    for w in &words {
        cmd = cmd.find_subcommand(w).ok_or_else(|| format!("unknown command {w:?} in config"))?;
    }

    let mut flags = Vec::new();
    for e in entries.iter().filter(|e| e.key != "command") {
        let arg = cmd
            .get_arguments()
            .chain(root.get_arguments())
            .find(|a| a.get_long() == Some(e.key.as_str()) || a.get_all_aliases().is_some_and(|al| al.contains(&e.key.as_str())))
            .ok_or_else(|| format!("config line {}: unknown key {:?} for `{}`", e.line, e.key, words.join(" ")))?;
        let long = arg.get_long().expect("config keys are long flags");
        if long == "config" {
            return Err(format!("config line {}: nested config files are not supported", e.line));
        }
        if given_on_command_line(&rest, long) {
            continue;
        }
        match arg.get_action() {
            ArgAction::SetTrue => match e.value.as_str() {
                "true" => flags.push(format!("--{long}")),
                "false" => {}
                v => return Err(format!("config line {}: {long} expects true or false, got {v:?}", e.line)),
            },
            _ => {
                flags.push(format!("--{long}"));
                flags.push(e.value.clone());
            }
        }
    }

    let mut out = vec![prog];
    match from_cli {
        Some(i) => {
            out.extend(rest[..i + words.len()].iter().cloned());
            out.extend(flags);
            out.extend(rest[i + words.len()..].iter().cloned());
        }
        None => {
            out.extend(words);
            out.extend(flags);
            out.extend(rest);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn with_file(body: &str, args: &[&str]) -> Result<Vec<String>, String> {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        let mut a: Vec<String> = vec!["translen".into(), "--config".into(), f.path().display().to_string()];
        a.extend(args.iter().map(|s| s.to_string()));
        expand(a)
    }

    #[test]
    fn expands_keys_to_flags() {
        let a = with_file("command = tau\ngroup = lattice:2\nelement = a\nN = 5\nprofile = true\nseed = 3\n", &[]).unwrap();
        assert_eq!(a, ["translen", "tau", "--group", "lattice:2", "--element", "a", "--N", "5", "--profile", "--seed", "3"]);
    }

    #[test]
    fn command_line_wins() {
        let a = with_file("command = tau\ngroup = lattice:2\nelement = a\nN = 5\n", &["--N", "9"]).unwrap();
        assert!(a.windows(2).any(|w| w == ["--N", "9"]));
        assert!(!a.windows(2).any(|w| w == ["--N", "5"]));
    }

    #[test]
    fn nested_commands() {
        let a = with_file("epsilon = 1/3\n", &["hhg", "validate"]).unwrap();
        assert_eq!(a, ["translen", "hhg", "validate", "--epsilon", "1/3"]);
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = with_file("command = tau\ncolour = blue\n", &[]).unwrap_err();
        assert!(e.contains("unknown key"), "{e}");
        assert!(with_file("command = tau\nprofile = maybe\n", &[]).is_err());
        assert!(with_file("group = lattice:2\n", &[]).is_err());
    }
}
