//! Plain-text reports: one PASS|FAIL|SKIP line per check, atomic writes.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl CheckOutcome {
    pub fn pass(name: &str, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: Status::Pass,
            detail: detail.into(),
        }
    }

    pub fn fail(name: &str, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: Status::Fail,
            detail: detail.into(),
        }
    }

    pub fn skip(name: &str, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: Status::Skip,
            detail: detail.into(),
        }
    }
}

pub fn render_report(header: &[(String, String)], outcomes: &[CheckOutcome]) -> String {
    let mut out = String::from("# mfw report\n");
    for (key, value) in header {
        out.push_str(&format!("{key}: {value}\n"));
    }
    for oc in outcomes {
        out.push_str(&format!(
            "check {}: {} ({})\n",
            oc.name,
            oc.status.as_str(),
            oc.detail
        ));
    }
    let overall = if outcomes.iter().any(|o| o.status == Status::Fail) {
        "FAIL"
    } else {
        "PASS"
    };
    if !outcomes.is_empty() {
        out.push_str(&format!("overall: {overall}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_line_per_check() {
        let text = render_report(
            &[("instance".into(), "calibration".into())],
            &[
                CheckOutcome::pass("bound_dfw", "max 1.4 <= 27.2"),
                CheckOutcome::skip("clt", "needs replications"),
                CheckOutcome::fail("invariants", "zero-mean violated"),
            ],
        );
        assert!(text.contains("check bound_dfw: PASS"));
        assert!(text.contains("check clt: SKIP"));
        assert!(text.contains("check invariants: FAIL"));
        assert!(text.ends_with("overall: FAIL\n"));
    }
}
