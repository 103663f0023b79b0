//! MovingAI `.map` grid files.
//!
//! ```text
//! type octile
//! height 2
//! width 3
//! map
//! .@.
//! ..T
//! ```
//!
//! `.`, `G` and `S` are passable; `@`, `O`, `T` and `W` are blocked. Any other
//! byte in the grid body is rejected. Lines may end in LF or CRLF.

use super::ParseError;

/// Identifier of a grid cell: `y * width + x`.
pub type CellId = usize;

/// A 2D passability grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridMap {
    name: String,
    width: usize,
    height: usize,
    /// Raw tile bytes, row-major. Kept so the body re-serializes byte-for-byte.
    tiles: Vec<u8>,
    passable: Vec<bool>,
}

fn tile_passable(tile: u8) -> Option<bool> {
    match tile {
        b'.' | b'G' | b'S' => Some(true),
        b'@' | b'O' | b'T' | b'W' => Some(false),
        _ => None,
    }
}

impl GridMap {
    /// Builds a grid from rows of tile characters.
    pub fn from_rows<S: AsRef<str>>(name: &str, rows: &[S]) -> Result<Self, ParseError> {
        let mut body = String::new();
        for row in rows {
            body.push_str(row.as_ref());
            body.push('\n');
        }
        let header = format!(
            "type octile\nheight {}\nwidth {}\nmap\n",
            rows.len(),
            rows.first().map_or(0, |r| r.as_ref().len())
        );
        parse_map(name, format!("{header}{body}").as_bytes())
    }

    /// Builds a grid from a passability mask (`true` = passable), row-major.
    pub fn from_passable(name: &str, width: usize, height: usize, passable: &[bool]) -> Self {
        assert!(width >= 1 && height >= 1, "grid must be at least 1x1");
        assert_eq!(passable.len(), width * height, "mask size mismatch");
        let tiles = passable
            .iter()
            .map(|&p| if p { b'.' } else { b'@' })
            .collect();
        Self {
            name: name.to_string(),
            width,
            height,
            tiles,
            passable: passable.to_vec(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn cell(&self, x: usize, y: usize) -> CellId {
        debug_assert!(x < self.width && y < self.height);
        y * self.width + x
    }

    /// `(x, y)` of a cell id.
    pub fn coords(&self, cell: CellId) -> (usize, usize) {
        (cell % self.width, cell / self.width)
    }

    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn is_passable(&self, cell: CellId) -> bool {
        self.passable[cell]
    }

    pub fn is_passable_xy(&self, x: usize, y: usize) -> bool {
        self.passable[self.cell(x, y)]
    }

    /// Row-major passability mask.
    pub fn passable_mask(&self) -> &[bool] {
        &self.passable
    }

    pub fn passable_count(&self) -> usize {
        self.passable.iter().filter(|&&p| p).count()
    }

    /// Passable 4-neighbours of `cell` in the order Up, Left, Right, Down.
    pub fn neighbors(&self, cell: CellId) -> impl Iterator<Item = CellId> + '_ {
        let (x, y) = self.coords(cell);
        let w = self.width;
        let up = (y > 0).then(|| cell - w);
        let left = (x > 0).then(|| cell - 1);
        let right = (x + 1 < w).then(|| cell + 1);
        let down = (y + 1 < self.height).then(|| cell + w);
        [up, left, right, down]
            .into_iter()
            .flatten()
            .filter(move |&c| self.passable[c])
    }

    /// The grid rows as written in the map body, without line terminators.
    pub fn body_rows(&self) -> impl Iterator<Item = &[u8]> {
        self.tiles.chunks(self.width)
    }

    /// Serializes in MovingAI format with LF line endings.
    pub fn to_map_string(&self) -> String {
        let mut out = format!(
            "type octile\nheight {}\nwidth {}\nmap\n",
            self.height, self.width
        );
        for row in self.body_rows() {
            // tiles are validated ASCII
            out.push_str(std::str::from_utf8(row).expect("ascii tiles"));
            out.push('\n');
        }
        out
    }
}

fn split_lines(bytes: &[u8]) -> Vec<&[u8]> {
    let mut lines: Vec<&[u8]> = bytes
        .split(|&b| b == b'\n')
        .map(|l| l.strip_suffix(b"\r").unwrap_or(l))
        .collect();
    // A trailing newline produces one empty final piece.
    if lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines
}

fn header_value(line: &[u8], key: &str, lineno: usize) -> Result<usize, ParseError> {
    let text = std::str::from_utf8(line)
        .map_err(|_| ParseError::at_line(lineno, "header is not valid UTF-8"))?;
    let mut parts = text.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some(k), Some(v), None) if k == key => v.parse::<usize>().map_err(|_| {
            ParseError::at_line(
                lineno,
                format!("`{key}` expects a non-negative integer, got `{v}`"),
            )
        }),
        _ => Err(ParseError::at_line(lineno, format!("expected `{key} <n>`"))),
    }
}

/// Parses a MovingAI `.map` file.
pub fn parse_map(name: &str, bytes: &[u8]) -> Result<GridMap, ParseError> {
    let lines = split_lines(bytes);
    if lines.len() < 4 {
        return Err(ParseError::at_line(lines.len() + 1, "truncated map header"));
    }
    if lines[0].trim_ascii() != b"type octile" {
        return Err(ParseError::at_line(1, "expected `type octile`"));
    }
    let height = header_value(lines[1], "height", 2)?;
    let width = header_value(lines[2], "width", 3)?;
    if lines[3].trim_ascii() != b"map" {
        return Err(ParseError::at_line(4, "expected `map`"));
    }
    if width == 0 || height == 0 {
        return Err(ParseError::at_line(2, "grid dimensions must be positive"));
    }

    let mut body = &lines[4..];
    // Blank lines after the grid are tolerated; anything else counts as a row.
    while body.len() > height && body.last().is_some_and(|l| l.is_empty()) {
        body = &body[..body.len() - 1];
    }
    if body.len() != height {
        return Err(ParseError::at_line(
            4 + body.len().min(height) + 1,
            format!("expected {height} grid rows, found {}", body.len()),
        ));
    }

    let mut tiles = Vec::with_capacity(width * height);
    let mut passable = Vec::with_capacity(width * height);
    for (row_idx, row) in body.iter().enumerate() {
        let lineno = row_idx + 5;
        for (col, &tile) in row.iter().enumerate() {
            match tile_passable(tile) {
                Some(p) => {
                    if col >= width {
                        break;
                    }
                    tiles.push(tile);
                    passable.push(p);
                }
                None if tile.is_ascii_whitespace() => {
                    return Err(ParseError::at(
                        lineno,
                        col + 1,
                        "unexpected whitespace in grid row",
                    ));
                }
                None => {
                    return Err(ParseError::at(
                        lineno,
                        col + 1,
                        format!("unknown tile character {:?}", tile as char),
                    ));
                }
            }
        }
        if row.len() != width {
            return Err(ParseError::at_line(
                lineno,
                format!("expected row of width {width}, found {}", row.len()),
            ));
        }
    }

    Ok(GridMap {
        name: name.to_string(),
        width,
        height,
        tiles,
        passable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map_bytes(rows: &[&str]) -> Vec<u8> {
        let mut s = format!(
            "type octile\nheight {}\nwidth {}\nmap\n",
            rows.len(),
            rows[0].len()
        );
        for r in rows {
            s.push_str(r);
            s.push('\n');
        }
        s.into_bytes()
    }

    #[test]
    fn single_row_with_obstacle() {
        let grid = parse_map("m", &map_bytes(&[".@."])).unwrap();
        assert_eq!((grid.width(), grid.height()), (3, 1));
        assert_eq!(grid.passable_mask(), &[true, false, true]);
    }

    #[test]
    fn character_table() {
        let grid = parse_map("m", &map_bytes(&["GT."])).unwrap();
        assert_eq!(grid.passable_mask(), &[true, false, true]);
        let grid = parse_map("m", &map_bytes(&["SOW@"])).unwrap();
        assert_eq!(grid.passable_mask(), &[true, false, false, false]);
    }

    #[test]
    fn unknown_character_reports_column() {
        let err = parse_map("m", &map_bytes(&[".x."])).unwrap_err();
        assert_eq!(err.line, 5);
        assert_eq!(err.column, Some(2));
    }

    #[test]
    fn crlf_accepted() {
        let text = "type octile\r\nheight 2\r\nwidth 2\r\nmap\r\n..\r\n.@\r\n";
        let grid = parse_map("m", text.as_bytes()).unwrap();
        assert_eq!(grid.passable_mask(), &[true, true, true, false]);
    }

    #[test]
    fn trailing_whitespace_rejected() {
        let text = "type octile\nheight 1\nwidth 2\nmap\n.. \n";
        let err = parse_map("m", text.as_bytes()).unwrap_err();
        assert_eq!(err.column, Some(3));
    }

    #[test]
    fn row_count_and_width_mismatch() {
        let text = "type octile\nheight 3\nwidth 2\nmap\n..\n..\n";
        assert!(parse_map("m", text.as_bytes()).is_err());
        let text = "type octile\nheight 2\nwidth 2\nmap\n..\n...\n";
        assert!(parse_map("m", text.as_bytes()).is_err());
        let text = "type octile\nheight 2\nwidth 3\nmap\n..\n...\n";
        assert!(parse_map("m", text.as_bytes()).is_err());
    }

    #[test]
    fn malformed_header() {
        assert!(parse_map("m", b"type octile\nwidth 2\nheight 2\nmap\n..\n..\n").is_err());
        assert!(parse_map("m", b"type grid\nheight 1\nwidth 1\nmap\n.\n").is_err());
        assert!(parse_map("m", b"type octile\nheight x\nwidth 1\nmap\n.\n").is_err());
        assert!(parse_map("m", b"type octile\nheight 1\n").is_err());
    }

    #[test]
    fn body_round_trips() {
        let bytes = map_bytes(&["GT.@", "S..W", "O..."]);
        let grid = parse_map("m", &bytes).unwrap();
        assert_eq!(grid.to_map_string().as_bytes(), &bytes[..]);
        assert_eq!(parse_map("m", &bytes).unwrap(), grid);
    }

    #[test]
    fn neighbor_order_is_up_left_right_down() {
        let grid = GridMap::from_rows("m", &["...", "...", "..."]).unwrap();
        let n: Vec<_> = grid.neighbors(grid.cell(1, 1)).collect();
        assert_eq!(n, vec![1, 3, 5, 7]);
    }
}
