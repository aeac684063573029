from django.contrib.auth.mixins import LoginRequiredMixin
from django.views.generic import DetailView, ListView

from .models import CampaignRun


class CampaignRunListView(LoginRequiredMixin, ListView):
    """
    Saved campaigns, most recent first
    """

    model = CampaignRun
    template_name = "validation/campaign_list.html"
    context_object_name = "campaigns"
    paginate_by = 20

    def get_queryset(self):
        queryset = CampaignRun.objects.all()
        status = self.request.GET.get("status", "all")
        if status in CampaignRun.Verdict.values:
            queryset = queryset.filter(status=status)
        return queryset

    def get_context_data(self, **kwargs):
        context = super().get_context_data(**kwargs)
        context["status"] = self.request.GET.get("status", "all")
        return context


class CampaignRunDetailView(LoginRequiredMixin, DetailView):
    """
    One campaign with its per-rule outcomes and counterexamples
    """

    model = CampaignRun
    template_name = "validation/campaign_detail.html"
    context_object_name = "campaign"

    def get_context_data(self, **kwargs):
        context = super().get_context_data(**kwargs)
        report = self.object.load_report()
        context["outcomes"] = self.object.outcomes.all()
        context["failing"] = [r for r in report.rules if r.counterexamples or r.error]
        context["skipped"] = report.skipped
        return context
