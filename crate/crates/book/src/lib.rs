//! The guide's code listings, compiled as doc-tests. mdbook cannot resolve
//! workspace dependencies on its own, so each chapter is pulled in here.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/registered_domains.md")]
pub mod registered_domains {}
#[doc = include_str!("../../../book/src/certificate_transparency.md")]
pub mod certificate_transparency {}
#[doc = include_str!("../../../book/src/common_crawl.md")]
pub mod common_crawl {}
#[doc = include_str!("../../../book/src/store.md")]
pub mod store {}
#[doc = include_str!("../../../book/src/coverage.md")]
pub mod coverage {}
#[doc = include_str!("../../../book/src/command_line.md")]
pub mod command_line {}
