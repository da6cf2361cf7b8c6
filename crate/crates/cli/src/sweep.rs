//! Cartesian parameter sweeps over a configuration template.

use blowup_core::Exec;

use crate::config::{from_table, set_path, Config, SweepSpec};
use crate::error::HarnessError;
use crate::output::{Cell, Table};
use crate::tasks::{classify_table, simulate_table, Context, CLASSIFY_COLUMNS, SIMULATE_COLUMNS};

/// Parameter assignments in row-major order (the last parameter varies fastest).
pub fn points(spec: &SweepSpec) -> Vec<Vec<(String, f64)>> {
    let mut out: Vec<Vec<(String, f64)>> = vec![Vec::new()];
    for (path, values) in &spec.params {
        out = out
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((path.clone(), *v));
                    q
                })
            })
            .collect();
    }
    out
}

/// Checks that the template names every swept parameter.
pub fn check_template(template: &toml::Table, spec: &SweepSpec) -> Result<(), HarnessError> {
    for (path, values) in &spec.params {
        set_path(&mut template.clone(), path, values[0])?;
    }
    let task_present = match spec.task.as_str() {
        "classify" => template.get("task").and_then(|t| t.get("classify")).is_some(),
        _ => template.get("task").and_then(|t| t.get("simulate")).is_some(),
    };
    if !task_present {
        return Err(HarnessError::config("sweep.task", format!("template has no [task.{}] section", spec.task)));
    }
    Ok(())
}

fn point_config(template: &toml::Table, assignment: &[(String, f64)]) -> Result<Config, HarnessError> {
    let mut t = template.clone();
    t.remove("sweep");
    for (path, v) in assignment {
        set_path(&mut t, path, *v)?;
    }
    from_table(&t)
}

fn point_rows(cfg: &Config, task: &str) -> Result<Table, HarnessError> {
    let ctx = Context::build(cfg)?;
    match task {
        "classify" => Ok(classify_table(&ctx, cfg.task.classify.as_ref().expect("checked by check_template"))?.0),
        _ => Ok(simulate_table(&ctx, cfg.task.simulate.as_ref().expect("checked by check_template"))?.0),
    }
}

/// Runs every point (concurrently under the current pool) and aggregates the rows.
/// A point that fails contributes one row with an Inconclusive or Undetermined
/// label and the error message.
pub fn run_sweep(template: &toml::Table, spec: &SweepSpec) -> Table {
    let task_cols = if spec.task == "classify" { CLASSIFY_COLUMNS } else { SIMULATE_COLUMNS };
    let mut columns = vec!["point"];
    columns.extend(spec.params.keys().map(String::as_str));
    columns.extend_from_slice(task_cols);
    columns.push("error");
    let mut table = Table::new(&columns);
    let pts = points(spec);
    let results = Exec::Parallel.map(&pts, |a| point_config(template, a).and_then(|c| point_rows(&c, &spec.task)));
    for (i, (assignment, res)) in pts.iter().zip(results).enumerate() {
        let mut prefix: Vec<Cell> = vec![i.into()];
        prefix.extend(assignment.iter().map(|(_, v)| Cell::Num(*v)));
        match res {
            Ok(rows) => {
                for r in rows.rows {
                    let mut row = prefix.clone();
                    row.extend(r);
                    row.push(Cell::Empty);
                    table.push(row);
                }
            }
            Err(e) => {
                let mut row = prefix.clone();
                let status_col = if spec.task == "classify" { "label" } else { "status" };
                let status = if spec.task == "classify" { "Inconclusive" } else { "Undetermined" };
                row.extend(task_cols.iter().map(|c| if *c == status_col { Cell::text(status) } else { Cell::Empty }));
                row.push(Cell::Text(e.to_string()));
                table.push(row);
            }
        }
    }
    table
}
