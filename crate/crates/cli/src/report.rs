use std::fmt::Write;

use provcheck_core::engine::AnalysisResult;

fn yes_no(flag: bool) -> &'static str {
    if flag {
        "yes"
    } else {
        "no"
    }
}

/// Plain-text report in box order: overall, location and source, tampering.
pub fn render_report(result: &AnalysisResult) -> String {
    let b = &result.boxes;
    let mut out = String::new();
    let _ = writeln!(out, "Overall assessment: {}", b.overall.label.as_str());
    let _ = writeln!(out, "  {}", b.overall.headline);
    let _ = writeln!(out);
    let _ = writeln!(out, "Location and Source (relevant: {})", yes_no(b.location_source.flag));
    let _ = writeln!(out, "  {}", b.location_source.reason);
    let _ = writeln!(out);
    let _ = writeln!(out, "Tampering (relevant: {})", yes_no(b.tampering.flag));
    let _ = writeln!(out, "  {}", b.tampering.reason);
    if !result.warnings.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "Warnings:");
        for w in &result.warnings {
            let _ = writeln!(out, "  - {w}");
        }
    }
    let _ = writeln!(out);
    let class = serde_json::to_value(result.heuristic_tamper_class).unwrap_or_default();
    let _ = writeln!(out, "Heuristic tamper class: {}", class.as_str().unwrap_or("unknown"));
    let _ = writeln!(out, "Analysis id: {}", result.id);
    out
}
