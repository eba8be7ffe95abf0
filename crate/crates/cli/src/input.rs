//! Step-response CSV input.

use ipid_core::TimeSeries;

/// Reads `time,output` pairs from either the trajectory format (columns
/// picked by header name) or a plain two-column file. The time column must
/// be uniformly spaced.
pub fn read_step_response(text: &str) -> Result<TimeSeries, String> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty()).peekable();
    let first = lines.peek().ok_or("empty CSV")?;
    let (time_col, out_col) = if first.split(',').all(|c| c.trim().parse::<f64>().is_ok()) {
        (0, 1)
    } else {
        let header: Vec<&str> = lines.next().unwrap_or_default().split(',').map(str::trim).collect();
        let find = |name: &str| header.iter().position(|h| *h == name);
        match (find("time"), find("output")) {
            (Some(t), Some(o)) => (t, o),
            _ if header.len() == 2 => (0, 1),
            _ => return Err("CSV header needs `time` and `output` columns".into()),
        }
    };

    let mut t = Vec::new();
    let mut y = Vec::new();
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let get = |i: usize| -> Result<f64, String> {
            fields
                .get(i)
                .ok_or_else(|| format!("row {}: missing column {i}", n + 1))?
                .trim()
                .parse()
                .map_err(|e| format!("row {}: {e}", n + 1))
        };
        t.push(get(time_col)?);
        y.push(get(out_col)?);
    }
    if t.len() < 2 {
        return Err("need at least two samples".into());
    }
    let h = t[1] - t[0];
    if !(h > 0.0) {
        return Err("time column must be increasing".into());
    }
    for (k, w) in t.windows(2).enumerate() {
        if ((w[1] - w[0]) - h).abs() > 1e-6 * h {
            return Err(format!("time column is not uniformly spaced at row {}", k + 2));
        }
    }
    TimeSeries::new(h, t[0], y).map_err(|e| e.to_string())
}
