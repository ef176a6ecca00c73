use std::sync::OnceLock;

use crate::catalog::{load_catalog, ComponentCatalog};
use crate::textparse::Lexicon;

pub fn default_catalog() -> &'static ComponentCatalog {
    static CATALOG: OnceLock<ComponentCatalog> = OnceLock::new();
    CATALOG.get_or_init(|| load_catalog(&crate::default_data_dir().join("catalog")).expect("default catalog"))
}

pub fn default_lexicon() -> &'static Lexicon {
    static LEXICON: OnceLock<Lexicon> = OnceLock::new();
    LEXICON.get_or_init(|| Lexicon::load(&crate::default_data_dir().join("lexicon.txt")).expect("default lexicon"))
}
