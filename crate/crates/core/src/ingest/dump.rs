//! Streaming reader for MediaWiki XML exports.
//!
//! Pages are yielded one at a time; only the page currently being read is
//! held in memory. Gzip-compressed dumps are detected by their magic bytes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

/// Namespace prefixes recognised from titles when the dump carries no usable
/// `<siteinfo>` mapping.
const KNOWN_PREFIXES: &[&str] = &[
    "Talk",
    "User",
    "User talk",
    "ProofWiki",
    "ProofWiki talk",
    "File",
    "File talk",
    "MediaWiki",
    "Template",
    "Template talk",
    "Help",
    "Category",
    "Category talk",
    "Definition",
    "Definition talk",
    "Axiom",
    "Axiom talk",
    "Symbols",
    "Mathematician",
    "Book",
    "Module",
];

#[derive(Debug, thiserror::Error)]
pub enum DumpError {
    #[error("I/O error reading dump: {0}")]
    Io(#[from] io::Error),
    #[error("malformed XML at byte {offset}: {message}")]
    Xml { offset: u64, message: String },
}

/// One `<page>` element of the dump, before any filtering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPage {
    pub title: String,
    /// Namespace name; empty for the main namespace.
    pub namespace: String,
    pub wikitext: String,
    /// Target title when the page is a redirect.
    pub redirect: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DumpWarning {
    pub offset: u64,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Title,
    Ns,
    Text,
    NamespaceName,
}

#[derive(Default)]
struct PageBuilder {
    start: u64,
    title: String,
    ns: String,
    text: String,
    redirect: Option<String>,
}

/// Iterator over the pages of a dump, in document order.
pub struct DumpReader<R: BufRead> {
    reader: Reader<R>,
    buf: Vec<u8>,
    namespaces: BTreeMap<i64, String>,
    namespace_key: Option<i64>,
    page: Option<PageBuilder>,
    field: Option<Field>,
    warnings: Vec<DumpWarning>,
    pages_seen: usize,
    finished: bool,
}

/// Opens a dump file, transparently decompressing gzip input.
pub fn open_dump(path: impl AsRef<Path>) -> Result<DumpReader<Box<dyn BufRead>>, DumpError> {
    let file = File::open(path)?;
    parse_dump(file)
}

/// Wraps a byte stream as a page iterator.
pub fn parse_dump<'a, R: Read + 'a>(input: R) -> Result<DumpReader<Box<dyn BufRead + 'a>>, DumpError> {
    let mut buffered = BufReader::new(input);
    let head = buffered.fill_buf()?;
    let inner: Box<dyn BufRead + 'a> = if head.starts_with(&GZIP_MAGIC) {
        Box::new(BufReader::new(MultiGzDecoder::new(buffered)))
    } else {
        Box::new(buffered)
    };
    Ok(DumpReader::new(inner))
}

impl<R: BufRead> DumpReader<R> {
    pub fn new(input: R) -> Self {
        DumpReader {
            reader: Reader::from_reader(input),
            buf: Vec::with_capacity(64 * 1024),
            namespaces: BTreeMap::new(),
            namespace_key: None,
            page: None,
            field: None,
            warnings: Vec::new(),
            pages_seen: 0,
            finished: false,
        }
    }

    /// Pages skipped so far and why.
    pub fn warnings(&self) -> &[DumpWarning] {
        &self.warnings
    }

    /// Number of `<page>` elements encountered, including skipped ones.
    pub fn pages_seen(&self) -> usize {
        self.pages_seen
    }

    fn xml_error(&self, message: impl Into<String>) -> DumpError {
        DumpError::Xml {
            offset: self.reader.error_position(),
            message: message.into(),
        }
    }

    fn on_start(&mut self, e: &BytesStart<'_>) {
        match (e.local_name().as_ref(), self.page.is_some()) {
            (b"page", _) => {
                self.page = Some(PageBuilder {
                    start: self.reader.buffer_position(),
                    ..PageBuilder::default()
                });
            }
            (b"title", true) => self.field = Some(Field::Title),
            (b"ns", true) => self.field = Some(Field::Ns),
            (b"text", true) => self.field = Some(Field::Text),
            (b"namespace", false) => {
                self.namespace_key = attribute(e, b"key").and_then(|k| k.trim().parse().ok());
                if let Some(key) = self.namespace_key {
                    self.namespaces.entry(key).or_default();
                }
                self.field = Some(Field::NamespaceName);
            }
            (b"redirect", true) => self.on_redirect(e),
            _ => {}
        }
    }

    fn on_redirect(&mut self, e: &BytesStart<'_>) {
        if let (Some(page), Some(target)) = (self.page.as_mut(), attribute(e, b"title")) {
            page.redirect = Some(target);
        }
    }

    fn on_text(&mut self, text: &str) {
        match (self.field, self.page.as_mut()) {
            (Some(Field::Title), Some(p)) => p.title.push_str(text),
            (Some(Field::Ns), Some(p)) => p.ns.push_str(text),
            (Some(Field::Text), Some(p)) => p.text.push_str(text),
            (Some(Field::NamespaceName), None) => {
                if let Some(key) = self.namespace_key {
                    self.namespaces.entry(key).or_default().push_str(text);
                }
            }
            _ => {}
        }
    }

    fn finish_page(&mut self) -> Option<RawPage> {
        let page = self.page.take()?;
        self.pages_seen += 1;
        let title = page.title.trim().to_string();
        if title.is_empty() {
            self.warnings.push(DumpWarning {
                offset: page.start,
                message: "page without a title skipped".to_string(),
            });
            return None;
        }
        let namespace = self.resolve_namespace(&title, page.ns.trim());
        let redirect = page.redirect.or_else(|| redirect_from_wikitext(&page.text));
        Some(RawPage {
            title,
            namespace,
            wikitext: page.text,
            redirect,
        })
    }

    fn resolve_namespace(&self, title: &str, ns: &str) -> String {
        if let Some(name) = ns.parse::<i64>().ok().and_then(|k| self.namespaces.get(&k)) {
            return name.trim().to_string();
        }
        let Some((prefix, _)) = title.split_once(':') else {
            return String::new();
        };
        let prefix = prefix.trim();
        let known = self
            .namespaces
            .values()
            .map(String::as_str)
            .chain(KNOWN_PREFIXES.iter().copied())
            .any(|n| !n.is_empty() && n.eq_ignore_ascii_case(prefix));
        if known {
            prefix.to_string()
        } else {
            String::new()
        }
    }
}

impl<R: BufRead> Iterator for DumpReader<R> {
    type Item = Result<RawPage, DumpError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        loop {
            self.buf.clear();
            let event = match self.reader.read_event_into(&mut self.buf) {
                Ok(ev) => ev.into_owned(),
                Err(e) => {
                    self.finished = true;
                    return Some(Err(self.xml_error(e.to_string())));
                }
            };
            match event {
                Event::Start(e) => self.on_start(&e),
                Event::Empty(e) => {
                    // `<text/>` and friends: the field is present but empty.
                    match e.local_name().as_ref() {
                        b"redirect" => self.on_redirect(&e),
                        b"namespace" if self.page.is_none() => {
                            if let Some(key) = attribute(&e, b"key").and_then(|k| k.trim().parse().ok()) {
                                self.namespaces.entry(key).or_default();
                            }
                        }
                        _ => {}
                    }
                }
                Event::Text(t) => match t.unescape() {
                    Ok(s) => self.on_text(&s),
                    Err(e) => {
                        self.finished = true;
                        return Some(Err(self.xml_error(e.to_string())));
                    }
                },
                Event::CData(c) => {
                    let s = String::from_utf8_lossy(&c).into_owned();
                    self.on_text(&s);
                }
                Event::End(e) => {
                    self.field = None;
                    if e.local_name().as_ref() == b"page" {
                        if let Some(page) = self.finish_page() {
                            return Some(Ok(page));
                        }
                    }
                }
                Event::Eof => {
                    self.finished = true;
                    if self.page.is_some() {
                        return Some(Err(self.xml_error("unexpected end of input inside <page>")));
                    }
                    return None;
                }
                _ => {}
            }
        }
    }
}

fn attribute(e: &BytesStart<'_>, name: &[u8]) -> Option<String> {
    e.attributes()
        .flatten()
        .find(|a| a.key.local_name().as_ref() == name)
        .and_then(|a| a.unescape_value().ok().map(|v| v.into_owned()))
}

fn redirect_from_wikitext(text: &str) -> Option<String> {
    let trimmed = text.trim_start();
    let head = trimmed.get(..9)?;
    if !head.eq_ignore_ascii_case("#redirect") {
        return None;
    }
    let rest = &trimmed[9..];
    let open = rest.find("[[")?;
    let close = rest[open..].find("]]")? + open;
    let target = rest[open + 2..close].split('|').next()?.trim();
    (!target.is_empty()).then(|| target.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pages(xml: &str) -> Vec<Result<RawPage, DumpError>> {
        parse_dump(xml.as_bytes()).unwrap().collect()
    }

    #[test]
    fn empty_dump_yields_nothing() {
        assert!(pages("<mediawiki></mediawiki>").is_empty());
    }

    #[test]
    fn reads_title_namespace_and_text() {
        let xml = r#"<mediawiki><siteinfo><namespaces>
            <namespace key="0" /><namespace key="102">Definition</namespace>
            </namespaces></siteinfo>
            <page><title>Definition:Group</title><ns>102</ns>
            <revision><text>A &lt;b&gt; group &amp; more</text></revision></page>
            <page><title>Main Page</title><ns>0</ns><revision><text/></revision></page>
            </mediawiki>"#;
        let got: Vec<RawPage> = pages(xml).into_iter().map(Result::unwrap).collect();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].title, "Definition:Group");
        assert_eq!(got[0].namespace, "Definition");
        assert_eq!(got[0].wikitext, "A <b> group & more");
        assert_eq!(got[1].namespace, "");
        assert_eq!(got[1].wikitext, "");
    }

    #[test]
    fn missing_title_is_skipped_with_warning() {
        let xml = "<mediawiki><page><ns>0</ns><revision><text>x</text></revision></page>\
                   <page><title>Kept</title><revision><text>y</text></revision></page></mediawiki>";
        let mut reader = parse_dump(xml.as_bytes()).unwrap();
        let first = reader.next().unwrap().unwrap();
        assert_eq!(first.title, "Kept");
        assert!(reader.next().is_none());
        assert_eq!(reader.pages_seen(), 2);
        assert_eq!(reader.warnings().len(), 1);
    }

    #[test]
    fn malformed_xml_reports_offset() {
        let xml = "<mediawiki><page><title>A</title></pgae></mediawiki>";
        let err = pages(xml).into_iter().find_map(Result::err).unwrap();
        match err {
            DumpError::Xml { offset, .. } => assert!(offset > 0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn truncated_dump_is_an_error() {
        let xml = "<mediawiki><page><title>A</title><revision><text>abc";
        assert!(pages(xml).into_iter().any(|r| r.is_err()));
    }

    #[test]
    fn namespace_falls_back_to_title_prefix() {
        let xml = "<mediawiki><page><title>Axiom:Axiom of Choice</title><revision><text>t</text></revision></page>\
                   <page><title>Ratio: A Note</title><revision><text>t</text></revision></page></mediawiki>";
        let got: Vec<RawPage> = pages(xml).into_iter().map(Result::unwrap).collect();
        assert_eq!(got[0].namespace, "Axiom");
        assert_eq!(got[1].namespace, "");
    }

    #[test]
    fn redirects_are_detected() {
        let xml = r#"<mediawiki><page><title>Groups</title><redirect title="Definition:Group" />
            <revision><text>#REDIRECT [[Definition:Group]]</text></revision></page>
            <page><title>Grp</title><revision><text>#redirect [[Definition:Group|g]]</text></revision></page></mediawiki>"#;
        let got: Vec<RawPage> = pages(xml).into_iter().map(Result::unwrap).collect();
        assert_eq!(got[0].redirect.as_deref(), Some("Definition:Group"));
        assert_eq!(got[1].redirect.as_deref(), Some("Definition:Group"));
    }

    #[test]
    fn gzip_input_is_detected() {
        use flate2::write::GzEncoder;
        use flate2::Compression;
        use std::io::Write;
        let xml = "<mediawiki><page><title>A</title><revision><text>t</text></revision></page></mediawiki>";
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(xml.as_bytes()).unwrap();
        let bytes = enc.finish().unwrap();
        let got: Vec<_> = parse_dump(bytes.as_slice()).unwrap().collect();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].as_ref().unwrap().title, "A");
    }
}
