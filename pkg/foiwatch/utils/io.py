import contextlib
import json
import os
import sys
from typing import Any, Iterable, Iterator, Optional, TextIO, Type, TypeVar, Union

from pydantic import BaseModel, ValidationError

from foiwatch.errors import ParseError

Source = Union[str, os.PathLike, TextIO]
M = TypeVar('M', bound=BaseModel)


def build_path(*args, make_dir: bool = True):
    path = os.path.join(*args)
    if make_dir and os.path.dirname(path):
        os.makedirs(os.path.dirname(path), exist_ok=True)
    return path


@contextlib.contextmanager
def open_text(target: Source, mode: str = 'r') -> Iterator[TextIO]:
    """
    Opens a path (``-`` meaning stdin/stdout) or passes an already open stream through.
    """
    if hasattr(target, 'read') or hasattr(target, 'write'):
        yield target
        return
    if str(target) == '-':
        yield sys.stdout if 'w' in mode or 'a' in mode else sys.stdin
        return
    if 'w' in mode or 'a' in mode:
        build_path(str(target))
    with open(target, mode, encoding='utf-8', newline='\n') as f:
        yield f


def to_jsonable(item: Any, exclude_none: bool = False) -> Any:
    if isinstance(item, BaseModel):
        return item.model_dump(mode='json', exclude_none=exclude_none)
    return item


def dumps(item: Any, exclude_none: bool = False) -> str:
    return json.dumps(to_jsonable(item, exclude_none), ensure_ascii=False)


def write_jsonl(items: Iterable[Any], sink: Source, exclude_none: bool = False) -> int:
    count = 0
    with open_text(sink, 'w') as out:
        for item in items:
            out.write(dumps(item, exclude_none))
            out.write('\n')
            count += 1
    return count


def iter_jsonl(source: Source) -> Iterator[tuple[int, Any]]:
    """
    Yields ``(line_number, decoded_value)`` for every non-blank line.

    Raises:
        ParseError: a line that is not valid JSON
    """
    with open_text(source, 'r') as f:
        for line_no, raw in enumerate(f, start=1):
            if not raw.strip():
                continue
            try:
                yield line_no, json.loads(raw)
            except json.JSONDecodeError as e:
                raise ParseError(f"malformed JSON ({e.msg})", line=line_no) from e


def parse_model(model_cls: Type[M], data: Any, line: Optional[int] = None,
                context: Optional[dict] = None) -> M:
    """Validates one decoded line, reporting the first failing field on error"""
    if not isinstance(data, dict):
        raise ParseError(f"expected a JSON object, got {type(data).__name__}", line=line)
    try:
        return model_cls.model_validate(data, context=context)
    except ValidationError as e:
        first = e.errors()[0]
        field = '.'.join(str(part) for part in first.get('loc', ()))
        if first.get('type') == 'missing':
            message = 'missing required field'
        else:
            message = first.get('msg', 'invalid value')
        raise ParseError(message, line=line, field=field or None) from e
