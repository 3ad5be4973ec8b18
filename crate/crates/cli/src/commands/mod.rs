pub mod augment;
pub mod evaluate;
pub mod tune;
pub mod vectorize;

use std::path::Path;

use gsmote::dataset::{load_csv, Dataset, LabelColumn};

use crate::error::{At, CliError};

pub(crate) fn load_dataset(path: &Path, label_column: &str) -> Result<Dataset, CliError> {
    let column: LabelColumn = label_column.parse().expect("infallible");
    load_csv(path, &column).at("load")
}

pub(crate) fn ensure_distinct(input: &Path, output: &Path) -> Result<(), CliError> {
    if input == output {
        return Err(CliError::Usage(format!(
            "output {} would overwrite the input",
            output.display()
        )));
    }
    Ok(())
}
