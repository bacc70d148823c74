"""Guarded-command model language: parsing, type checking, evaluation."""
from typing import Mapping, Optional

from . import ast
from .evaluate import compile_expr, evaluate
from .parser import parse_expression, parse_model, parse_partition, parse_property
from .printer import format_expr, format_model, format_property
from .typecheck import TypedModel, type_check

__all__ = [
    "ast", "compile_expr", "evaluate", "format_expr", "format_model", "format_property",
    "parse_expression", "parse_model", "parse_partition", "parse_property",
    "TypedModel", "type_check", "load_model", "select_property",
]


def load_model(text: str, constants: Optional[Mapping[str, object]] = None,
               partition: Optional[str] = None) -> TypedModel:
    """Parse and type-check in one step; ``partition`` overrides the model's."""
    m = parse_model(text, constants)
    part = parse_partition(partition) if partition is not None else None
    return type_check(m, None, part)


def select_property(model: TypedModel, selector: Optional[str] = None) -> ast.PropertySpec:
    """Find a property by name, or parse an inline one such as ``Pmax=? [F done]``.

    Without a selector the model's first property is used.
    """
    if selector is None:
        if not model.properties:
            raise KeyError("model declares no property")
        return model.properties[0]
    for p in model.properties:
        if p.name == selector:
            return p
    prop = parse_property(selector)
    model.target_fn(prop)
    return prop
