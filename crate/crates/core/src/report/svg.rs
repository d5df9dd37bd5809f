use std::fmt::Write;

use crate::alignment::EditKind;
use crate::classifier::Category;
use crate::frontend::FrameClock;

use super::AnalysisReport;

pub const DEFAULT_PX_PER_S: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgOptions {
    /// Horizontal scale.
    pub px_per_s: f64,
    /// Width reserved for lane labels left of `t = 0`.
    pub label_width: f64,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self {
            px_per_s: DEFAULT_PX_PER_S,
            label_width: 140.0,
        }
    }
}

const AXIS_Y: f64 = 24.0;
const SEGMENT_Y: f64 = 40.0;
const SEGMENT_H: f64 = 36.0;
const OPS_Y: f64 = 84.0;
const OPS_H: f64 = 16.0;
const EVENTS_Y: f64 = 112.0;
const LANE_H: f64 = 22.0;
const RIGHT_PAD: f64 = 20.0;

fn op_color(kind: EditKind) -> &'static str {
    match kind {
        EditKind::Insertion => "#d62728",
        EditKind::Deletion => "#9467bd",
        EditKind::Substitution => "#ff7f0e",
        EditKind::Prolongation => "#1f77b4",
    }
}

fn op_name(kind: EditKind) -> &'static str {
    match kind {
        EditKind::Insertion => "insertion",
        EditKind::Deletion => "deletion",
        EditKind::Substitution => "substitution",
        EditKind::Prolongation => "prolongation",
    }
}

fn category_color(c: Category) -> &'static str {
    match c {
        Category::SoundRepetition => "#e15759",
        Category::SyllableRepetition => "#f28e2b",
        Category::WordRepetition => "#edc948",
        Category::Prolongation => "#4e79a7",
        Category::BlockSilent => "#76b7b2",
        Category::BlockAudible => "#59a14f",
        Category::Atypical => "#b07aa1",
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Renders the alignment map: a time axis, one `segment` rectangle per
/// aligned phone, color-coded `edit-op` marks and one lane per event
/// category holding an `event` rectangle per event.
pub fn render_alignment_svg(report: &AnalysisReport, opts: &SvgOptions) -> String {
    let x0 = opts.label_width;
    let px = opts.px_per_s;
    let x = |t: f64| x0 + t * px;
    let duration = report
        .audio
        .duration_s
        .max(report.alignment.last().map_or(0.0, |s| s.end_s));
    let width = x0 + duration * px + RIGHT_PAD;
    let height = EVENTS_Y + Category::ALL.len() as f64 * LANE_H + 8.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.2}" height="{height:.2}" viewBox="0 0 {width:.2} {height:.2}" data-report-id="{}" data-version="{}" font-family="sans-serif" font-size="11">"#,
        escape(&report.report_id),
        report.version
    );

    let _ = writeln!(s, r#"<g class="axis">"#);
    let _ = writeln!(
        s,
        r##"<line x1="{:.2}" y1="{AXIS_Y}" x2="{:.2}" y2="{AXIS_Y}" stroke="#333"/>"##,
        x(0.0),
        x(duration)
    );
    let steps = (duration / 0.5).floor() as usize;
    for k in 0..=steps {
        let t = k as f64 * 0.5;
        let _ = writeln!(
            s,
            r##"<line class="tick" x1="{tx:.2}" y1="{}" x2="{tx:.2}" y2="{}" stroke="#333"/><text class="tick-label" x="{tx:.2}" y="{}" text-anchor="middle">{t:.1}</text>"##,
            AXIS_Y - 4.0,
            AXIS_Y + 4.0,
            AXIS_Y - 8.0,
            tx = x(t),
        );
    }
    let _ = writeln!(s, r#"<text class="axis-label" x="4" y="{}">time (s)</text>"#, AXIS_Y + 4.0);
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g class="segments">"#);
    let _ = writeln!(s, r#"<text class="lane-label" x="4" y="{}">phones</text>"#, SEGMENT_Y + SEGMENT_H / 2.0 + 4.0);
    for seg in &report.alignment {
        let w = ((seg.end_s - seg.start_s) * px).max(0.0);
        let shade = 0.25 + 0.6 * seg.mean_posterior.clamp(0.0, 1.0);
        let _ = writeln!(
            s,
            r##"<rect class="segment" x="{:.2}" y="{SEGMENT_Y}" width="{w:.2}" height="{SEGMENT_H}" fill="#8fb3d9" fill-opacity="{shade:.3}" stroke="#345" data-symbol="{}" data-start-s="{:.4}" data-end-s="{:.4}"/>"##,
            x(seg.start_s),
            escape(&seg.symbol),
            seg.start_s,
            seg.end_s
        );
        let _ = writeln!(
            s,
            r#"<text class="segment-label" x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            x((seg.start_s + seg.end_s) / 2.0),
            SEGMENT_Y + SEGMENT_H / 2.0 + 4.0,
            escape(&seg.symbol)
        );
    }
    let _ = writeln!(s, "</g>");

    let clock = FrameClock::new(&report.config.frontend, report.audio.sample_rate);
    let _ = writeln!(s, r#"<g class="edit-ops">"#);
    let _ = writeln!(s, r#"<text class="lane-label" x="4" y="{}">edit ops</text>"#, OPS_Y + OPS_H - 3.0);
    for (i, op) in report.edit_ops.iter().enumerate() {
        let (a, b) = clock.span_s(op.frame_span.0, op.frame_span.1);
        let w = ((b - a) * px).max(2.0);
        let label = format!(
            "{} {} -> {}",
            op_name(op.kind),
            op.expected_symbol.as_deref().unwrap_or("-"),
            op.realized_symbol.as_deref().unwrap_or("-")
        );
        let _ = writeln!(
            s,
            r#"<rect class="edit-op edit-op-{}" x="{:.2}" y="{OPS_Y}" width="{w:.2}" height="{OPS_H}" fill="{}" data-op-index="{i}"><title>{}</title></rect>"#,
            op_name(op.kind),
            x(a),
            op_color(op.kind),
            escape(&label)
        );
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g class="events">"#);
    for (lane, cat) in Category::ALL.into_iter().enumerate() {
        let y = EVENTS_Y + lane as f64 * LANE_H;
        let _ = writeln!(
            s,
            r##"<g class="event-lane" data-category="{cat}"><line x1="{x1:.2}" y1="{mid:.2}" x2="{x2:.2}" y2="{mid:.2}" stroke="#ccc"/><text class="lane-label" x="4" y="{ty:.2}">{cat}</text>"##,
            x1 = x(0.0),
            x2 = x(duration),
            mid = y + LANE_H / 2.0,
            ty = y + LANE_H / 2.0 + 4.0
        );
        for ev in report.events.iter().filter(|e| e.category == cat) {
            let w = ((ev.end_s - ev.start_s) * px).max(2.0);
            let _ = writeln!(
                s,
                r#"<rect class="event" x="{:.2}" y="{:.2}" width="{w:.2}" height="{:.2}" fill="{}" fill-opacity="{:.3}" data-event-id="{}" data-category="{cat}"><title>{} ({cat}, confidence {:.2})</title></rect>"#,
                x(ev.start_s),
                y + 3.0,
                LANE_H - 6.0,
                category_color(cat),
                0.3 + 0.7 * ev.calibrated_confidence.clamp(0.0, 1.0),
                escape(&ev.id),
                escape(&ev.id),
                ev.calibrated_confidence
            );
        }
        let _ = writeln!(s, "</g>");
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}
