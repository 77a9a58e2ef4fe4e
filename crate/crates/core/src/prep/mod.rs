//! Sentence segmentation and language-ID filtering of translated text.

pub mod langid;
pub mod segment;

pub use langid::{
    filter_by_language, identify, read_profiles, train_langid, write_profiles, LangProfile, LangVerdict,
    LanguageFilterResult,
};
pub use segment::{resolve_profile, segment, PrefixKind, SegmenterProfile, SegmenterRegistry};

impl AsRef<str> for crate::corpus::Sentence {
    fn as_ref(&self) -> &str {
        &self.text
    }
}
