//! CSV and SVG output of optimization results.

use crate::lattice::ShapeClass;

use super::{MinimizeResult, PhaseScanRow};

fn color(s: ShapeClass) -> &'static str {
    match s {
        ShapeClass::Triangular => "#d62728",
        ShapeClass::Rhombic => "#ff7f0e",
        ShapeClass::Square => "#2ca02c",
        ShapeClass::Rectangular => "#1f77b4",
        ShapeClass::Generic => "#7f7f7f",
    }
}

pub fn phase_rows_csv(rows: &[PhaseScanRow]) -> String {
    let mut out = String::from("control,x,y,volume,shape,value,certified,error\n");
    for r in rows {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{},{}\n",
            r.control,
            r.best_param.x,
            r.best_param.y,
            r.best_param.volume,
            r.shape,
            r.value,
            r.certified,
            r.error.as_deref().unwrap_or("").replace([',', '\n'], ";")
        ));
    }
    out
}

impl MinimizeResult {
    pub fn to_csv(&self) -> String {
        format!(
            "x,y,volume,shape,value,error_bound,runner_up_gap,certified,unbounded\n\
             {:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{},{}\n",
            self.best_param.x,
            self.best_param.y,
            self.best_param.volume,
            self.shape,
            self.best_value,
            self.error_bound,
            self.runner_up_gap,
            self.certified,
            self.unbounded
        )
    }
}

/// Strip chart: control on the horizontal axis, one colored band per row.
pub fn phase_strip_svg(rows: &[PhaseScanRow], label: &str) -> String {
    let (w, h, pad) = (720.0, 140.0, 40.0);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    let ok: Vec<&PhaseScanRow> = rows.iter().filter(|r| r.control.is_finite()).collect();
    if let (Some(first), Some(last)) = (ok.first(), ok.last()) {
        let (c0, c1) = (first.control, last.control.max(first.control + 1e-300));
        let xmap = |c: f64| pad + (w - 2.0 * pad) * (c - c0) / (c1 - c0);
        for (i, r) in ok.iter().enumerate() {
            let left = if i == 0 { xmap(r.control) } else { xmap(0.5 * (ok[i - 1].control + r.control)) };
            let right = if i + 1 == ok.len() {
                xmap(r.control)
            } else {
                xmap(0.5 * (r.control + ok[i + 1].control))
            };
            let fill = if r.error.is_some() { "black" } else { color(r.shape) };
            s.push_str(&format!(
                "<rect x=\"{left:.3}\" y=\"30\" width=\"{:.3}\" height=\"50\" fill=\"{fill}\"/>\n",
                (right - left).max(1.0)
            ));
        }
        s.push_str(&format!(
            "<text x=\"{pad}\" y=\"100\" font-size=\"12\">{c0}</text>\n\
             <text x=\"{:.3}\" y=\"100\" font-size=\"12\" text-anchor=\"end\">{c1}</text>\n",
            w - pad
        ));
    }
    let mut lx = pad;
    for sh in [
        ShapeClass::Triangular,
        ShapeClass::Rhombic,
        ShapeClass::Square,
        ShapeClass::Rectangular,
        ShapeClass::Generic,
    ] {
        s.push_str(&format!(
            "<rect x=\"{lx}\" y=\"115\" width=\"10\" height=\"10\" fill=\"{}\"/>\
             <text x=\"{:.1}\" y=\"124\" font-size=\"11\">{sh}</text>\n",
            color(sh),
            lx + 14.0
        ));
        lx += 110.0;
    }
    s.push_str(&format!(
        "<text x=\"{pad}\" y=\"20\" font-size=\"13\">{}</text>\n</svg>\n",
        label.replace('&', "&amp;").replace('<', "&lt;")
    ));
    s
}
