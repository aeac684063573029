from django.db import models, transaction


class CampaignRunManager(models.Manager):
    @transaction.atomic
    def record(self, report, schema_path: str = ""):
        """
        Persist a campaign Report together with one RuleOutcome per rule.
        """
        totals = report.totals
        run = self.create(
            status=self.model.verdict(report),
            version=report.version,
            schema_path=schema_path,
            rules_ok=totals.ok,
            rules_ko=totals.ko,
            rules_error=totals.error,
            counterexample_count=totals.counterexamples,
            item_count=report.universe.total,
            wall_ms=report.wall_ms,
            report=report.model_dump(mode="json"),
        )
        run.outcomes.bulk_create(
            [
                run.outcomes.model(
                    campaign=run,
                    rule=result.name,
                    status=result.status,
                    severity=result.severity,
                    error_class=result.error_class,
                    selected=result.selected,
                    counterexample_count=len(result.counterexamples),
                    timing_ms=result.timing_ms,
                )
                for result in report.rules
            ]
        )
        return run
