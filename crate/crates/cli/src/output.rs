//! Sweep rows and their CSV/JSON encodings.

use std::io::Write;

use lemonchain::{welfare_report, Equilibrium, Error, Regime, Tolerances};
use serde::Serialize;

/// Column order of sweep and single-point CSV output.
pub const COLUMNS: [&str; 18] = [
    "theta",
    "regime",
    "p_b",
    "p_c",
    "pi_b",
    "pi_c",
    "k_b",
    "k_c",
    "q",
    "v_b",
    "v_0",
    "f_b",
    "v_s_h",
    "v_s_l",
    "f_s",
    "alpha_star",
    "alpha_i",
    "status",
];

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Row {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    pub theta: f64,
    pub regime: Option<Regime>,
    pub p_b: Option<f64>,
    pub p_c: Option<f64>,
    pub pi_b: Option<f64>,
    pub pi_c: Option<f64>,
    pub k_b: Option<f64>,
    pub k_c: Option<f64>,
    pub q: Option<f64>,
    pub v_b: Option<f64>,
    pub v_0: Option<f64>,
    pub f_b: Option<f64>,
    pub v_s_h: Option<f64>,
    pub v_s_l: Option<f64>,
    pub f_s: Option<f64>,
    pub alpha_star: Option<f64>,
    pub alpha_i: Option<f64>,
    pub status: String,
}

impl Row {
    pub fn failed(phi: Option<f64>, theta: f64, err: &Error) -> Self {
        Row {
            phi,
            theta,
            status: err.to_string(),
            ..Row::default()
        }
    }

    /// Welfare columns are filled for `lambda = 1` only.
    pub fn from_equilibrium(phi: Option<f64>, eq: &Equilibrium, tol: &Tolerances) -> Self {
        let mut row = Row {
            phi,
            theta: eq.params.theta,
            regime: Some(eq.regime),
            p_b: Some(eq.p_b),
            p_c: Some(eq.p_c),
            pi_b: Some(eq.pi_b),
            pi_c: Some(eq.pi_c),
            k_b: Some(eq.k_b),
            k_c: Some(eq.k_c),
            q: Some(eq.q_crypto),
            alpha_star: Some(eq.alpha_star),
            alpha_i: Some(eq.alpha_i),
            status: "ok".into(),
            ..Row::default()
        };
        if eq.params.is_benchmark() {
            match welfare_report(eq, tol) {
                Ok(w) => {
                    row.v_b = Some(w.v_b);
                    row.v_0 = Some(w.v_0);
                    row.f_b = Some(w.f_b);
                    row.v_s_h = Some(w.v_s_h);
                    row.v_s_l = Some(w.v_s_l);
                    row.f_s = Some(w.f_s);
                }
                Err(e) => row.status = e.to_string(),
            }
        }
        row
    }

    fn fields(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(19);
        if let Some(phi) = self.phi {
            out.push(float(phi));
        }
        out.push(float(self.theta));
        out.push(self.regime.map(|r| format!("{r:?}")).unwrap_or_default());
        for v in [
            self.p_b,
            self.p_c,
            self.pi_b,
            self.pi_c,
            self.k_b,
            self.k_c,
            self.q,
            self.v_b,
            self.v_0,
            self.f_b,
            self.v_s_h,
            self.v_s_l,
            self.f_s,
            self.alpha_star,
            self.alpha_i,
        ] {
            out.push(v.map(float).unwrap_or_default());
        }
        out.push(self.status.clone());
        out
    }
}

/// 17 significant digits; parses back to the same `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn header(with_phi: bool) -> Vec<&'static str> {
    let mut h = Vec::with_capacity(19);
    if with_phi {
        h.push("phi");
    }
    h.extend(COLUMNS);
    h
}

pub fn write_csv<W: Write>(w: W, rows: &[Row], with_phi: bool) -> csv::Result<()> {
    let mut wr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    wr.write_record(header(with_phi))?;
    for r in rows {
        wr.write_record(r.fields())?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use lemonchain::{solve, EconomyParams};

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 0.393_4, 1e-300, 5e-324, 0.0] {
            assert_eq!(float(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(float(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn csv_row_layout() {
        let tol = Tolerances::default();
        let eq = solve(&EconomyParams::new(0.3, 0.5, 0.5), &tol).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &[Row::from_equilibrium(None, &eq, &tol)], false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], COLUMNS.join(","));
        let cells: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(cells.len(), COLUMNS.len());
        assert_eq!(cells[1], "Coexistence");
        assert_eq!(cells[2].parse::<f64>().unwrap(), eq.p_b);
        assert_eq!(cells[17], "ok");
        assert!(!text.contains('\r'));
    }

    #[test]
    fn general_rows_leave_welfare_empty() {
        let tol = Tolerances::default();
        let eq = solve(&EconomyParams::new(0.3, 0.7, 0.6).with_lambda(0.5), &tol).unwrap();
        let row = Row::from_equilibrium(Some(0.7), &eq, &tol);
        assert!(row.v_b.is_none() && row.f_s.is_none());
        assert_eq!(row.fields().len(), 19);
    }
}
