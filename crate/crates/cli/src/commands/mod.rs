pub mod experiment;
pub mod pairs;
pub mod preprocess;
pub mod repr;
pub mod tagger;
