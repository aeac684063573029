from django.urls import path

from . import views

urlpatterns = [
    path("", views.CampaignRunListView.as_view(), name="campaign_list"),
    path("<int:pk>/", views.CampaignRunDetailView.as_view(), name="campaign_detail"),
]
