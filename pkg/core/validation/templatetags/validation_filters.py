from django import template

register = template.Library()

_BADGES = {"OK": "success", "KO": "warning", "ERROR": "danger"}


@register.filter
def status_badge(status):
    """
    Bootstrap colour for a rule or campaign status
    """
    return _BADGES.get(str(status), "secondary")


@register.filter
def assignment(values):
    try:
        return ", ".join(f"{var}={value}" for var, value in values.items())
    except AttributeError:
        return values
