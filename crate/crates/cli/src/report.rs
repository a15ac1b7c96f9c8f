//! Structured command output.

use std::fmt::Write as _;

use num_complex::Complex64;
use seqmodels::linalg::Vector;
use sha2::{Digest, Sha256};

/// One input file and the SHA-256 of its bytes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InputDigest {
    pub label: String,
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn new(label: &str, path: &str, bytes: &[u8]) -> Self {
        let digest = Sha256::digest(bytes);
        let mut hex = String::with_capacity(64);
        for b in digest {
            write!(hex, "{b:02x}").expect("writing to a String");
        }
        Self {
            label: label.to_string(),
            path: path.to_string(),
            sha256: hex,
        }
    }
}

/// Result of one command. Fields print in insertion order, so identical
/// inputs give identical text.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    pub command: String,
    pub args: Vec<(String, String)>,
    pub inputs: Vec<InputDigest>,
    pub results: Vec<(String, String)>,
    pub residuals: Vec<(String, String)>,
    pub exit_code: i32,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            ..Self::default()
        }
    }

    pub fn arg(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.args.push((key.to_string(), value.to_string()));
        self
    }

    pub fn input(&mut self, d: InputDigest) -> &mut Self {
        self.inputs.push(d);
        self
    }

    pub fn result(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.results.push((key.into(), value.to_string()));
        self
    }

    pub fn residual(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.residuals.push((key.into(), num(value)));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.results
            .iter()
            .chain(&self.residuals)
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// `key=value` lines.
    pub fn porcelain(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: &str| {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        };
        line("command", &self.command);
        for (k, v) in &self.args {
            line(&format!("arg.{k}"), v);
        }
        for d in &self.inputs {
            line(&format!("input.{}.path", d.label), &d.path);
            line(&format!("input.{}.sha256", d.label), &d.sha256);
        }
        for (k, v) in &self.results {
            line(&format!("result.{k}"), v);
        }
        for (k, v) in &self.residuals {
            line(&format!("residual.{k}"), v);
        }
        line("exit_code", &self.exit_code.to_string());
        out
    }

    pub fn human(&self) -> String {
        let mut out = format!("{}\n", self.command);
        let section = |out: &mut String, title: &str, rows: &[(String, String)]| {
            if rows.is_empty() {
                return;
            }
            out.push_str(title);
            out.push_str(":\n");
            let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, v) in rows {
                let _ = writeln!(out, "  {k:<width$}  {v}");
            }
        };
        section(&mut out, "arguments", &self.args);
        let inputs: Vec<(String, String)> = self
            .inputs
            .iter()
            .map(|d| (d.label.clone(), format!("{} (sha256 {})", d.path, d.sha256)))
            .collect();
        section(&mut out, "inputs", &inputs);
        section(&mut out, "results", &self.results);
        section(&mut out, "residuals", &self.residuals);
        let _ = writeln!(out, "exit code {}", self.exit_code);
        out
    }
}

/// Shortest text of `x` rounded to 15 significant digits, which hides
/// last-bit noise without losing anything a reader cares about.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{x:.14e}").parse().expect("formatted float parses");
    // avoid "-0.0"
    let rounded = if rounded == 0.0 { 0.0 } else { rounded };
    format!("{rounded:?}")
}

pub fn num_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|&x| num(x)).collect();
    format!("[{}]", parts.join(", "))
}

/// Real vectors print as `[a, b]`; anything with an imaginary part above
/// roundoff relative to the largest entry prints as `[[re, im], ...]`, with
/// roundoff-sized parts shown as zero.
pub fn complex_list(zs: &[Complex64]) -> String {
    let scale = zs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if zs.iter().all(|z| z.im.abs() <= 1e-14 * scale) {
        let re: Vec<f64> = zs.iter().map(|z| z.re).collect();
        return num_list(&re);
    }
    let clean = |x: f64| if x.abs() <= 1e-14 * scale { 0.0 } else { x };
    let parts: Vec<String> = zs
        .iter()
        .map(|z| format!("[{}, {}]", num(clean(z.re)), num(clean(z.im))))
        .collect();
    format!("[{}]", parts.join(", "))
}

pub fn vector(v: &Vector) -> String {
    complex_list(v.as_slice())
}

pub fn sequence(seq: &[usize]) -> String {
    let parts: Vec<String> = seq.iter().map(usize::to_string).collect();
    parts.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_are_rounded_and_stable() {
        assert_eq!(num(0.7000000000000001), "0.7");
        assert_eq!(num(0.25), "0.25");
        assert_eq!(num(-0.0), "0.0");
        assert_eq!(num(1e-17), "1e-17");
        assert_eq!(num(f64::INFINITY), "inf");
        assert_eq!(complex_list(&[Complex64::new(0.25, 0.0), Complex64::new(0.75, 1e-30)]), "[0.25, 0.75]");
        assert_eq!(
            complex_list(&[Complex64::new(0.5, 3e-18), Complex64::new(0.25, 0.5)]),
            "[[0.5, 0.0], [0.25, 0.5]]"
        );
    }

    #[test]
    fn porcelain_layout() {
        let mut r = RunReport::new("eval");
        r.arg("semantics", "joint")
            .input(InputDigest::new("model", "m.json", b"abc"))
            .result("probability", num(0.5))
            .residual("imag", 0.0);
        assert_eq!(
            r.porcelain(),
            "command=eval\narg.semantics=joint\ninput.model.path=m.json\n\
             input.model.sha256=ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad\n\
             result.probability=0.5\nresidual.imag=0.0\nexit_code=0\n"
        );
        assert_eq!(r.get("probability"), Some("0.5"));
    }
}
