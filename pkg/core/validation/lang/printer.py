from . import ast

_PRED_PREC = {"<=>": 1, "=>": 2, "or": 3, "&": 4}
_NOT_PREC = 5
_ATOM_PREC = 6

_EXPR_PREC = {
    "|->": 1,
    "\\/": 2,
    "<|": 2,
    "<<|": 2,
    "|>": 2,
    "|>>": 2,
    "/\\": 3,
    "..": 4,
    "+": 5,
    "-": 5,
    "*": 6,
    "/": 6,
    "mod": 6,
}
_UNARY_PREC = 7
_POSTFIX_PREC = 8
_PRIMARY_PREC = 9


def _wrap(text: str, prec: int, min_prec: int) -> str:
    return f"({text})" if prec < min_prec else text


def quote(text: str) -> str:
    escaped = text.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def print_expr(node: ast.Expr, min_prec: int = 0) -> str:
    match node:
        case ast.Ident(name):
            return name
        case ast.IntLit(value) if value < 0:
            return _wrap(str(value), _UNARY_PREC, min_prec)
        case ast.IntLit(value):
            return str(value)
        case ast.BoolLit(value):
            return "TRUE" if value else "FALSE"
        case ast.TypeSet(name):
            return name
        case ast.PowSet(operand):
            return f"POW({print_expr(operand)})"
        case ast.SetExt(items):
            return "{" + ", ".join(print_expr(item) for item in items) + "}"
        case ast.Comprehension(var, body):
            return f"{{{var} | {print_pred(body)}}}"
        case ast.Binary(";", left, right):
            return f"({print_expr(left)} ; {print_expr(right)})"
        case ast.Binary(op, left, right):
            prec = _EXPR_PREC[op]
            text = f"{print_expr(left, prec)} {op} {print_expr(right, prec + 1)}"
            return _wrap(text, prec, min_prec)
        case ast.Neg(operand):
            return _wrap(f"-{print_expr(operand, _UNARY_PREC)}", _UNARY_PREC, min_prec)
        case ast.Call(fn, arg):
            return f"{fn}({print_expr(arg)})"
        case ast.Inverse(operand):
            return f"{print_expr(operand, _POSTFIX_PREC)}~"
        case ast.Image(rel, arg):
            return f"{print_expr(rel, _POSTFIX_PREC)}[{print_expr(arg)}]"
        case ast.Apply(fn, arg):
            return f"{print_expr(fn, _POSTFIX_PREC)}({print_expr(arg)})"
    raise TypeError(f"not an expression: {node!r}")


def print_pred(node: ast.Pred, min_prec: int = 0) -> str:
    match node:
        case ast.Connective(op, left, right):
            prec = _PRED_PREC[op]
            if op == "<=>":
                text = f"{print_pred(left, prec + 1)} <=> {print_pred(right, prec)}"
            else:
                text = f"{print_pred(left, prec)} {op} {print_pred(right, prec + 1)}"
            return _wrap(text, prec, min_prec)
        case ast.Not(operand):
            return _wrap(f"not {print_pred(operand, _NOT_PREC)}", _NOT_PREC, min_prec)
        case ast.Compare(op, left, right):
            return f"{print_expr(left)} {op} {print_expr(right)}"
        case ast.ArrowMember(element, arrow, domain, range_):
            return f"{print_expr(element)} : {print_expr(domain)} {arrow} {print_expr(range_)}"
        case ast.Quantifier(kind, names, body):
            return f"{kind}({', '.join(names)}).({print_pred(body)})"
    raise TypeError(f"not a predicate: {node!r}")


def print_where_item(item: ast.Binding | ast.Filter) -> str:
    if isinstance(item, ast.Binding):
        return f"{item.var} : {print_expr(item.domain)}"
    return print_pred(item.pred, _NOT_PREC)


def print_rule(rule: ast.Rule) -> str:
    lines = [f"RULE {rule.name}"]
    if rule.doc:
        lines.append(f"  DOC {quote(rule.doc)}")
    if rule.error_class != rule.name:
        lines.append(f"  CLASS {rule.error_class}")
    if rule.severity is not ast.Severity.ERROR:
        lines.append(f"  SEVERITY {rule.severity}")
    lines.append("WHERE")
    lines.append("  " + " &\n  ".join(print_where_item(item) for item in rule.where))
    lines.append("VERIFY")
    lines.append(f"  {print_pred(rule.verify)}")
    lines.append(f"MESSAGE {quote(rule.message)}")
    lines.append("END")
    return "\n".join(lines)


def pretty_print(node: ast.Node) -> str:
    """
    Canonical source text; parsing it back yields a structurally equal tree
    """
    match node:
        case ast.Rule():
            return print_rule(node)
        case ast.Pred():
            return print_pred(node)
        case ast.Expr():
            return print_expr(node)
    raise TypeError(f"cannot print {node!r}")
