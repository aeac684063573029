from django.db import models
from django_extensions.db.models import TimeStampedModel

from .manager import CampaignRunManager
from .rules import Report, Status


class CampaignRun(TimeStampedModel):
    """
    One `bdv validate --save` run, with its full JSON report
    """

    class Verdict(models.TextChoices):
        OK = "OK", "All rules OK"
        KO = "KO", "Counterexamples found"
        ERROR = "ERROR", "Rules in error"

    status = models.CharField(max_length=5, choices=Verdict.choices)
    version = models.CharField(max_length=20)
    schema_path = models.CharField(max_length=500, blank=True)
    rules_ok = models.PositiveIntegerField(default=0)
    rules_ko = models.PositiveIntegerField(default=0)
    rules_error = models.PositiveIntegerField(default=0)
    counterexample_count = models.PositiveIntegerField(default=0)
    item_count = models.PositiveIntegerField(default=0)
    wall_ms = models.FloatField(default=0)
    report = models.JSONField()

    objects = CampaignRunManager()

    class Meta:
        ordering = ["-created"]

    def __str__(self):
        return f"Campaign {self.pk} ({self.status}, {self.created:%Y-%m-%d %H:%M})"

    @staticmethod
    def verdict(report: Report) -> str:
        if report.totals.error:
            return CampaignRun.Verdict.ERROR
        if report.totals.ko:
            return CampaignRun.Verdict.KO
        return CampaignRun.Verdict.OK

    @property
    def rule_count(self) -> int:
        return self.rules_ok + self.rules_ko + self.rules_error

    def load_report(self) -> Report:
        return Report.model_validate(self.report)


class RuleOutcome(models.Model):
    campaign = models.ForeignKey(CampaignRun, on_delete=models.CASCADE, related_name="outcomes")
    rule = models.CharField(max_length=200)
    status = models.CharField(max_length=5, choices=[(s.value, s.value) for s in Status])
    severity = models.CharField(max_length=10, default="ERROR")
    error_class = models.CharField(max_length=200, blank=True)
    selected = models.PositiveIntegerField(default=0)
    counterexample_count = models.PositiveIntegerField(default=0)
    timing_ms = models.FloatField(default=0)

    class Meta:
        ordering = ["rule"]
        constraints = [models.UniqueConstraint(fields=["campaign", "rule"], name="unique_rule_per_campaign")]

    def __str__(self):
        return f"{self.rule}: {self.status}"
