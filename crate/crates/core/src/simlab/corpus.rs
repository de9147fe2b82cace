//! Prompt corpus loading: a dataset CSV joined with a label CSV.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimlabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    InDomain,
    OutDomain,
    Benign,
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Domain::InDomain => write!(f, "in_domain"),
            Domain::OutDomain => write!(f, "out_domain"),
            Domain::Benign => write!(f, "benign"),
        }
    }
}

/// One labeled prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub id: String,
    pub text: String,
    pub harmful: bool,
    pub domain: Domain,
}

/// Joined, validated corpus plus load statistics.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    records: Vec<PromptRecord>,
    index: HashMap<String, usize>,
    /// Dataset rows that had no label and were dropped.
    pub unlabeled: usize,
}

impl Corpus {
    pub fn records(&self) -> &[PromptRecord] {
        &self.records
    }

    pub fn get(&self, id: &str) -> Option<&PromptRecord> {
        self.index.get(id).map(|i| &self.records[*i])
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// (in-domain harmful, out-domain harmful, benign) counts.
    pub fn counts(&self) -> (usize, usize, usize) {
        let mut in_domain = 0;
        let mut out_domain = 0;
        let mut benign = 0;
        for r in &self.records {
            match r.domain {
                Domain::InDomain => in_domain += 1,
                Domain::OutDomain => out_domain += 1,
                Domain::Benign => benign += 1,
            }
        }
        (in_domain, out_domain, benign)
    }
}

#[cfg(test)]
impl Corpus {
    pub(crate) fn push_for_tests(&mut self, record: PromptRecord) {
        self.index.insert(record.id.clone(), self.records.len());
        self.records.push(record);
    }
}

/// Load and join `dataset.csv` (columns `id` optional, `text` or `goal`)
/// with `labels.csv` (columns `id,harmful,domain`).
///
/// Every label must reference a dataset row; dataset rows without a label
/// are dropped and counted. The `benign` domain may not be marked harmful.
pub fn load_corpus(
    dataset_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<Corpus, SimlabError> {
    let dataset_path = dataset_path.as_ref();
    let labels_path = labels_path.as_ref();

    let mut reader = csv::Reader::from_path(dataset_path).map_err(|e| SimlabError::Csv {
        path: dataset_path.display().to_string(),
        message: e.to_string(),
    })?;
    let headers = reader
        .headers()
        .map_err(|e| SimlabError::Csv {
            path: dataset_path.display().to_string(),
            message: e.to_string(),
        })?
        .clone();
    let text_idx = headers
        .iter()
        .position(|h| h == "text")
        .or_else(|| headers.iter().position(|h| h == "goal"))
        .ok_or_else(|| SimlabError::MissingColumn {
            path: dataset_path.display().to_string(),
            column: "text (or goal)".into(),
        })?;
    let id_idx = headers.iter().position(|h| h == "id");

    let mut texts: Vec<(String, String)> = Vec::new();
    for (rownum, row) in reader.records().enumerate() {
        let row = row.map_err(|e| SimlabError::Csv {
            path: dataset_path.display().to_string(),
            message: e.to_string(),
        })?;
        let id = match id_idx {
            Some(i) => row.get(i).unwrap_or_default().trim().to_string(),
            None => rownum.to_string(),
        };
        let text = row.get(text_idx).unwrap_or_default().trim().to_string();
        if id.is_empty() || text.is_empty() {
            return Err(SimlabError::Csv {
                path: dataset_path.display().to_string(),
                message: format!("row {} has an empty id or text", rownum + 1),
            });
        }
        texts.push((id, text));
    }
    let text_by_id: HashMap<&str, &str> =
        texts.iter().map(|(id, text)| (id.as_str(), text.as_str())).collect();
    if text_by_id.len() != texts.len() {
        return Err(SimlabError::Csv {
            path: dataset_path.display().to_string(),
            message: "duplicate prompt ids".into(),
        });
    }

    let mut reader = csv::Reader::from_path(labels_path).map_err(|e| SimlabError::Csv {
        path: labels_path.display().to_string(),
        message: e.to_string(),
    })?;
    let headers = reader
        .headers()
        .map_err(|e| SimlabError::Csv {
            path: labels_path.display().to_string(),
            message: e.to_string(),
        })?
        .clone();
    let need = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| SimlabError::MissingColumn {
            path: labels_path.display().to_string(),
            column: name.into(),
        })
    };
    let id_idx = need("id")?;
    let harmful_idx = need("harmful")?;
    let domain_idx = need("domain")?;

    let mut records = Vec::new();
    let mut index = HashMap::new();
    let mut labeled: std::collections::HashSet<String> = std::collections::HashSet::new();
    for row in reader.records() {
        let row = row.map_err(|e| SimlabError::Csv {
            path: labels_path.display().to_string(),
            message: e.to_string(),
        })?;
        let id = row.get(id_idx).unwrap_or_default().trim().to_string();
        let Some(text) = text_by_id.get(id.as_str()) else {
            return Err(SimlabError::DanglingLabel { id });
        };
        let harmful = match row.get(harmful_idx).unwrap_or_default().trim() {
            "true" | "1" => true,
            "false" | "0" => false,
            other => {
                return Err(SimlabError::Csv {
                    path: labels_path.display().to_string(),
                    message: format!("label {id}: harmful must be true/false, got `{other}`"),
                })
            }
        };
        let domain = match row.get(domain_idx).unwrap_or_default().trim() {
            "in_domain" => Domain::InDomain,
            "out_domain" => Domain::OutDomain,
            "benign" => Domain::Benign,
            other => {
                return Err(SimlabError::Csv {
                    path: labels_path.display().to_string(),
                    message: format!(
                        "label {id}: domain must be in_domain/out_domain/benign, got `{other}`"
                    ),
                })
            }
        };
        if domain == Domain::Benign && harmful {
            return Err(SimlabError::LabelInvariant { id });
        }
        if !labeled.insert(id.clone()) {
            return Err(SimlabError::Csv {
                path: labels_path.display().to_string(),
                message: format!("duplicate label for id {id}"),
            });
        }
        index.insert(id.clone(), records.len());
        records.push(PromptRecord { id, text: text.to_string(), harmful, domain });
    }

    let unlabeled = texts.len() - records.len();
    Ok(Corpus { records, index, unlabeled })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &tempfile::TempDir, name: &str, contents: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn joins_dataset_and_labels() {
        let dir = tempfile::tempdir().unwrap();
        let dataset = write_file(&dir, "d.csv", "id,text\np1,how to bake bread\np2,make a bomb now\n");
        let labels =
            write_file(&dir, "l.csv", "id,harmful,domain\np1,false,benign\np2,true,out_domain\n");
        let corpus = load_corpus(&dataset, &labels).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.unlabeled, 0);
        assert_eq!(corpus.get("p2").unwrap().domain, Domain::OutDomain);
    }

    #[test]
    fn goal_column_is_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let dataset = write_file(&dir, "d.csv", "goal,target\nsome harmful goal,whatever\n");
        let labels = write_file(&dir, "l.csv", "id,harmful,domain\n0,true,out_domain\n");
        let corpus = load_corpus(&dataset, &labels).unwrap();
        assert_eq!(corpus.get("0").unwrap().text, "some harmful goal");
    }

    #[test]
    fn dangling_label_names_the_id() {
        let dir = tempfile::tempdir().unwrap();
        let dataset = write_file(&dir, "d.csv", "id,text\np1,hello\n");
        let labels = write_file(&dir, "l.csv", "id,harmful,domain\nghost,false,benign\n");
        match load_corpus(&dataset, &labels) {
            Err(SimlabError::DanglingLabel { id }) => assert_eq!(id, "ghost"),
            other => panic!("expected dangling label, got {other:?}"),
        }
    }

    #[test]
    fn empty_labels_reject_all_prompts_as_unlabeled() {
        let dir = tempfile::tempdir().unwrap();
        let dataset = write_file(&dir, "d.csv", "id,text\np1,hello\np2,world\n");
        let labels = write_file(&dir, "l.csv", "id,harmful,domain\n");
        let corpus = load_corpus(&dataset, &labels).unwrap();
        assert!(corpus.is_empty());
        assert_eq!(corpus.unlabeled, 2);
    }

    #[test]
    fn benign_harmful_conflict_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let dataset = write_file(&dir, "d.csv", "id,text\np1,hello\n");
        let labels = write_file(&dir, "l.csv", "id,harmful,domain\np1,true,benign\n");
        assert!(matches!(
            load_corpus(&dataset, &labels),
            Err(SimlabError::LabelInvariant { .. })
        ));
    }

    #[test]
    fn missing_text_column_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let dataset = write_file(&dir, "d.csv", "id,prompt\np1,hello\n");
        let labels = write_file(&dir, "l.csv", "id,harmful,domain\n");
        assert!(matches!(
            load_corpus(&dataset, &labels),
            Err(SimlabError::MissingColumn { .. })
        ));
    }
}
