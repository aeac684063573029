from django.contrib import admin

from .models import CampaignRun, RuleOutcome


class RuleOutcomeInline(admin.TabularInline):
    model = RuleOutcome
    extra = 0
    can_delete = False
    readonly_fields = [
        "rule",
        "status",
        "severity",
        "error_class",
        "selected",
        "counterexample_count",
        "timing_ms",
    ]


@admin.register(CampaignRun)
class CampaignRunAdmin(admin.ModelAdmin):
    list_display = [
        "pk",
        "created",
        "status",
        "rules_ok",
        "rules_ko",
        "rules_error",
        "counterexample_count",
        "item_count",
    ]
    list_filter = ["status"]
    ordering = ["-created"]
    search_fields = ("schema_path", "outcomes__rule")
    readonly_fields = ["report"]
    inlines = [RuleOutcomeInline]


@admin.register(RuleOutcome)
class RuleOutcomeAdmin(admin.ModelAdmin):
    list_display = ["rule", "status", "severity", "selected", "counterexample_count", "campaign"]
    list_filter = ["status", "severity"]
    search_fields = ("rule", "error_class")
