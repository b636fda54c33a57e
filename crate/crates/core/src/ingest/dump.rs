use std::collections::BTreeSet;
use std::io::BufRead;

use quick_xml::events::Event;
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use super::IngestError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawRevision {
    pub page_id: u64,
    pub rev_id: u64,
    #[serde(default)]
    pub parent_rev_id: Option<u64>,
    #[serde(default)]
    pub comment: String,
    #[serde(default)]
    pub text: String,
}

/// A page with its revisions sorted by `rev_id`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Page {
    pub page_id: u64,
    pub revisions: Vec<RawRevision>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DumpFormat {
    Xml,
    Jsonl,
}

/// Guesses the format from the first non-blank byte: `<` means XML.
pub fn detect_format<R: BufRead>(reader: &mut R) -> Result<DumpFormat, IngestError> {
    loop {
        let buf = reader.fill_buf().map_err(|e| IngestError::Io(e.to_string()))?;
        if buf.is_empty() {
            return Ok(DumpFormat::Jsonl);
        }
        match buf.iter().position(|b| !b.is_ascii_whitespace()) {
            Some(p) => return Ok(if buf[p] == b'<' { DumpFormat::Xml } else { DumpFormat::Jsonl }),
            None => {
                let n = buf.len();
                reader.consume(n);
            }
        }
    }
}

fn malformed(offset: u64, message: impl Into<String>) -> IngestError {
    IngestError::MalformedDump {
        offset,
        message: message.into(),
    }
}

fn finish_page(page_id: u64, mut revisions: Vec<RawRevision>, offset: u64) -> Result<Page, IngestError> {
    revisions.sort_by_key(|r| r.rev_id);
    let mut seen = BTreeSet::new();
    for r in &revisions {
        if !seen.insert(r.rev_id) {
            return Err(malformed(offset, format!("duplicate revision {} in page {page_id}", r.rev_id)));
        }
    }
    Ok(Page { page_id, revisions })
}

/// Pages yielded one at a time; only the current page is held in memory.
pub enum PageStream<R: BufRead> {
    Xml(XmlPages<R>),
    Jsonl(JsonlPages<R>),
}

pub fn stream_pages<R: BufRead>(reader: R, format: DumpFormat) -> PageStream<R> {
    match format {
        DumpFormat::Xml => PageStream::Xml(XmlPages::new(reader)),
        DumpFormat::Jsonl => PageStream::Jsonl(JsonlPages {
            reader,
            offset: 0,
            pending: None,
            done: false,
        }),
    }
}

impl<R: BufRead> Iterator for PageStream<R> {
    type Item = Result<Page, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        match self {
            PageStream::Xml(x) => x.next(),
            PageStream::Jsonl(j) => j.next(),
        }
    }
}

pub struct JsonlPages<R> {
    reader: R,
    offset: u64,
    pending: Option<RawRevision>,
    done: bool,
}

impl<R: BufRead> JsonlPages<R> {
    fn read_revision(&mut self) -> Result<Option<RawRevision>, IngestError> {
        let mut line = String::new();
        loop {
            line.clear();
            let start = self.offset;
            let n = self.reader.read_line(&mut line).map_err(|e| IngestError::Io(e.to_string()))?;
            if n == 0 {
                return Ok(None);
            }
            self.offset += n as u64;
            if line.trim().is_empty() {
                continue;
            }
            return serde_json::from_str(&line)
                .map(Some)
                .map_err(|e| malformed(start, e.to_string()));
        }
    }
}

impl<R: BufRead> Iterator for JsonlPages<R> {
    type Item = Result<Page, IngestError>;

    /// Groups consecutive lines with the same `page_id`.
    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let first = match self.pending.take() {
            Some(r) => r,
            None => match self.read_revision() {
                Ok(Some(r)) => r,
                Ok(None) => {
                    self.done = true;
                    return None;
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
            },
        };
        let page_id = first.page_id;
        let mut revisions = vec![first];
        loop {
            match self.read_revision() {
                Ok(Some(r)) if r.page_id == page_id => revisions.push(r),
                Ok(Some(r)) => {
                    self.pending = Some(r);
                    break;
                }
                Ok(None) => {
                    self.done = true;
                    break;
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
            }
        }
        Some(finish_page(page_id, revisions, self.offset))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Field {
    PageId,
    RevId,
    ParentId,
    Comment,
    Text,
}

#[derive(Default)]
struct RevBuilder {
    rev_id: Option<u64>,
    parent: Option<u64>,
    comment: String,
    text: String,
}

pub struct XmlPages<R> {
    reader: Reader<R>,
    buf: Vec<u8>,
    done: bool,
}

impl<R: BufRead> XmlPages<R> {
    fn new(reader: R) -> Self {
        Self {
            reader: Reader::from_reader(reader),
            buf: Vec::new(),
            done: false,
        }
    }

    fn pos(&self) -> u64 {
        self.reader.buffer_position()
    }

    fn parse_id(&self, s: &str) -> Result<u64, IngestError> {
        s.trim()
            .parse()
            .map_err(|_| malformed(self.pos(), format!("invalid id {s:?}")))
    }

    /// Reads events until the next `</page>`; `None` at a clean end of input.
    fn read_page(&mut self) -> Result<Option<Page>, IngestError> {
        let mut stack: Vec<Vec<u8>> = Vec::new();
        let mut in_page = false;
        let mut page_id: Option<u64> = None;
        let mut revisions = Vec::new();
        let mut rev: Option<RevBuilder> = None;
        let mut field: Option<Field> = None;
        let mut value = String::new();
        loop {
            self.buf.clear();
            let event = self
                .reader
                .read_event_into(&mut self.buf)
                .map_err(|e| malformed(self.reader.error_position(), e.to_string()))?
                .into_owned();
            match event {
                Event::Start(e) => {
                    let name = e.local_name().as_ref().to_vec();
                    let parent = stack.last().map(Vec::as_slice);
                    match (name.as_slice(), parent) {
                        (b"page", _) => {
                            in_page = true;
                            page_id = None;
                            revisions.clear();
                        }
                        (b"revision", Some(b"page")) if in_page => rev = Some(RevBuilder::default()),
                        (b"id", Some(b"page")) if in_page => field = Some(Field::PageId),
                        (b"id", Some(b"revision")) if rev.is_some() => field = Some(Field::RevId),
                        (b"parentid", Some(b"revision")) if rev.is_some() => field = Some(Field::ParentId),
                        (b"comment", Some(b"revision")) if rev.is_some() => field = Some(Field::Comment),
                        (b"text", Some(b"revision")) if rev.is_some() => field = Some(Field::Text),
                        _ => {}
                    }
                    value.clear();
                    stack.push(name);
                }
                Event::Text(t) => {
                    if field.is_some() {
                        let s = t
                            .unescape()
                            .map_err(|e| malformed(self.pos(), e.to_string()))?;
                        value.push_str(&s);
                    }
                }
                Event::CData(c) => {
                    if field.is_some() {
                        value.push_str(&String::from_utf8_lossy(&c.into_inner()));
                    }
                }
                Event::End(e) => {
                    stack.pop();
                    let name = e.local_name();
                    if let Some(f) = field.take() {
                        match f {
                            Field::PageId => page_id = Some(self.parse_id(&value)?),
                            Field::RevId => rev.as_mut().unwrap().rev_id = Some(self.parse_id(&value)?),
                            Field::ParentId => rev.as_mut().unwrap().parent = Some(self.parse_id(&value)?),
                            Field::Comment => rev.as_mut().unwrap().comment = std::mem::take(&mut value),
                            Field::Text => rev.as_mut().unwrap().text = std::mem::take(&mut value),
                        }
                    }
                    match name.as_ref() {
                        b"revision" if rev.is_some() && stack.last().map(Vec::as_slice) == Some(b"page") => {
                            let b = rev.take().unwrap();
                            let pid = page_id.ok_or_else(|| malformed(self.pos(), "revision before page id"))?;
                            let rev_id = b.rev_id.ok_or_else(|| malformed(self.pos(), "revision without id"))?;
                            revisions.push(RawRevision {
                                page_id: pid,
                                rev_id,
                                parent_rev_id: b.parent,
                                comment: b.comment,
                                text: b.text,
                            });
                        }
                        b"page" if in_page => {
                            let pid = page_id.ok_or_else(|| malformed(self.pos(), "page without id"))?;
                            return finish_page(pid, std::mem::take(&mut revisions), self.pos()).map(Some);
                        }
                        _ => {}
                    }
                }
                Event::Eof => {
                    if !stack.is_empty() {
                        return Err(malformed(self.pos(), "unexpected end of input inside an element"));
                    }
                    return Ok(None);
                }
                // self-closing elements (<comment deleted="deleted"/>, <text/>) carry no text
                _ => {}
            }
        }
    }
}

impl<R: BufRead> Iterator for XmlPages<R> {
    type Item = Result<Page, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.read_page() {
            Ok(Some(p)) => Some(Ok(p)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const XML: &str = r#"<mediawiki xmlns="http://www.mediawiki.org/xml/export-0.10/">
  <siteinfo><sitename>Test</sitename></siteinfo>
  <page>
    <title>Alpha</title>
    <id>7</id>
    <revision><id>30</id><parentid>20</parentid><comment>third</comment><text>c &amp; d</text></revision>
    <revision><id>10</id><text>a</text></revision>
    <revision><id>20</id><parentid>10</parentid><comment>second</comment><text>b</text></revision>
  </page>
  <page><title>Beta</title><id>8</id><revision><id>5</id><comment deleted="deleted"/><text bytes="0"/></revision></page>
</mediawiki>"#;

    #[test]
    fn xml_pages_sorted_revisions() {
        let pages: Vec<Page> = stream_pages(XML.as_bytes(), DumpFormat::Xml)
            .collect::<Result<_, _>>()
            .unwrap();
        assert_eq!(pages.len(), 2);
        assert_eq!(pages[0].page_id, 7);
        let ids: Vec<u64> = pages[0].revisions.iter().map(|r| r.rev_id).collect();
        assert_eq!(ids, vec![10, 20, 30]);
        assert_eq!(pages[0].revisions[0].comment, "");
        assert_eq!(pages[0].revisions[2].text, "c & d");
        assert_eq!(pages[0].revisions[2].parent_rev_id, Some(20));
        assert_eq!(pages[1].revisions[0].comment, "");
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(stream_pages("".as_bytes(), DumpFormat::Xml).count(), 0);
        assert_eq!(stream_pages("".as_bytes(), DumpFormat::Jsonl).count(), 0);
        assert_eq!(stream_pages("<mediawiki></mediawiki>".as_bytes(), DumpFormat::Xml).count(), 0);
    }

    #[test]
    fn malformed_xml_reports_offset() {
        let bad = "<mediawiki><page><id>1</id><revision><id>2</id></page></mediawiki>";
        let res: Vec<_> = stream_pages(bad.as_bytes(), DumpFormat::Xml).collect();
        assert!(matches!(res.last(), Some(Err(IngestError::MalformedDump { .. }))));
        let truncated = "<mediawiki><page><id>1</id>";
        let res: Vec<_> = stream_pages(truncated.as_bytes(), DumpFormat::Xml).collect();
        assert!(matches!(res.last(), Some(Err(IngestError::MalformedDump { .. }))));
    }

    #[test]
    fn jsonl_groups_contiguous_pages() {
        let text = concat!(
            r#"{"page_id":1,"rev_id":2,"comment":"x","text":"b"}"#,
            "\n",
            r#"{"page_id":1,"rev_id":1,"text":"a"}"#,
            "\n\n",
            r#"{"page_id":2,"rev_id":9,"text":"z"}"#,
            "\n"
        );
        let pages: Vec<Page> = stream_pages(text.as_bytes(), DumpFormat::Jsonl)
            .collect::<Result<_, _>>()
            .unwrap();
        assert_eq!(pages.len(), 2);
        assert_eq!(pages[0].revisions[0].rev_id, 1);
        assert_eq!(pages[1].revisions.len(), 1);
    }

    #[test]
    fn jsonl_error_offset_is_line_start() {
        let text = "{\"page_id\":1,\"rev_id\":1}\nnot json\n";
        let res: Vec<_> = stream_pages(text.as_bytes(), DumpFormat::Jsonl).collect();
        assert!(matches!(res.last(), Some(Err(IngestError::MalformedDump { offset: 25, .. }))));
    }

    #[test]
    fn format_detection() {
        let mut r = "  \n<mediawiki>".as_bytes();
        assert_eq!(detect_format(&mut r).unwrap(), DumpFormat::Xml);
        let mut r = "{\"page_id\":1}".as_bytes();
        assert_eq!(detect_format(&mut r).unwrap(), DumpFormat::Jsonl);
    }
}
