import json
import re
from pathlib import Path
from typing import List, Optional, Tuple

from pydantic import ValidationError

from toric_bounds.numerics import parse_rational, to_rational
from toric_bounds.polytope import build_polytope, builtin_polytope, make_functional
from toric_bounds.types import DelzantPolytope, PolytopeFileModel
from toric_bounds.utils import InputFormatError, logger

_BUILTIN_PATTERN = re.compile(r"^\s*([A-Za-z_]+)\s*(?::\s*(\S+))?\s*$")
_FACET_PATTERN = re.compile(r'"normal"')


class PolytopeParser:
    """Reads polytopes from `name:param` builtin specs and JSON facet files"""

    def parse_builtin(self, spec: str) -> DelzantPolytope:
        """cpn:3, rectangle:3/2, trapezoid:1 ..."""
        match = _BUILTIN_PATTERN.match(spec)
        if not match:
            raise InputFormatError(f"builtin spec '{spec}' is not of the form name:param", field="builtin")
        name, param = match.group(1).lower(), match.group(2)
        if param is not None:
            try:
                param = to_rational(param)
            except (InputFormatError, TypeError, ValueError) as e:
                raise InputFormatError(f"parameter '{param}' is not a rational number: {e}", field="builtin") from e
        logger.info(f"Building builtin polytope {name}" + (f" with parameter {param}" if param is not None else ""))
        return builtin_polytope(name, param)

    def load_file(self, path: Path) -> DelzantPolytope:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as e:
            raise InputFormatError(f"cannot read polytope file {path}: {e}") from e
        return self.parse_text(text, default_name=path.stem)

    def parse_text(self, text: str, default_name: str = "polytope") -> DelzantPolytope:
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise InputFormatError(f"invalid JSON: {e.msg}", line=e.lineno) from e
        if not isinstance(raw, dict):
            raise InputFormatError("top level must be a JSON object with 'dim' and 'facets'", line=1)

        try:
            model = PolytopeFileModel.model_validate(raw)
        except ValidationError as e:
            first = e.errors()[0]
            field = ".".join(str(part) for part in first["loc"]) or None
            line = self._line_of(text, first["loc"])
            raise InputFormatError(first["msg"], field=field, line=line) from e

        facets, notes = [], []
        for i, entry in enumerate(model.facets):
            try:
                offset = parse_rational(entry.offset)
            except InputFormatError as e:
                raise InputFormatError(str(e), field=f"facets.{i}.offset", line=self._facet_line(text, i)) from e
            functional, note = make_functional(entry.normal, offset)
            facets.append(functional)
            if note:
                notes.append(f"facets[{i}]: {note}")

        name = model.name or default_name
        return build_polytope(facets, model.dim, name=name, warnings=notes)

    def _line_of(self, text: str, loc: Tuple) -> Optional[int]:
        if len(loc) >= 2 and loc[0] == "facets" and isinstance(loc[1], int):
            return self._facet_line(text, loc[1])
        if loc:
            key = re.search(rf'"{re.escape(str(loc[0]))}"', text)
            if key:
                return text.count("\n", 0, key.start()) + 1
        return None

    def _facet_line(self, text: str, index: int) -> Optional[int]:
        """Line of the index-th "normal" key, i.e. where facets[index] is written"""
        positions: List[int] = [m.start() for m in _FACET_PATTERN.finditer(text)]
        if index < len(positions):
            return text.count("\n", 0, positions[index]) + 1
        return None
