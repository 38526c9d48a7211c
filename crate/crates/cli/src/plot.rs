use std::path::Path;

use plotters::prelude::*;

use crate::commands::Curve;

/// One line per λ.
pub fn render_figure1(path: &Path, curves: &[Curve]) -> Result<(), String> {
    let n_max = curves
        .iter()
        .flat_map(|(_, pts)| pts.iter().map(|p| p.0))
        .max()
        .unwrap_or(2) as f64;
    let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| e.to_string())?;
    let mut chart = ChartBuilder::on(&root)
        .margin(20)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(0f64..n_max, 0f64..1f64)
        .map_err(|e| e.to_string())?;
    chart
        .configure_mesh()
        .x_desc("N")
        .y_desc("lambda_mix")
        .draw()
        .map_err(|e| e.to_string())?;
    let palette = [&BLUE, &GREEN, &RED, &MAGENTA, &CYAN, &BLACK];
    for (i, (lambda, pts)) in curves.iter().enumerate() {
        let color = palette[i % palette.len()];
        chart
            .draw_series(LineSeries::new(pts.iter().map(|&(n, v)| (n as f64, v)), color))
            .map_err(|e| e.to_string())?
            .label(format!("lambda = {lambda}"))
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
    }
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE)
        .draw()
        .map_err(|e| e.to_string())?;
    root.present().map_err(|e| e.to_string())
}
