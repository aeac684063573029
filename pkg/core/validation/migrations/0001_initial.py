# Generated by Django 6.0.1 on 2026-10-12 09:41

import django.db.models.deletion
import django_extensions.db.fields
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='CampaignRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('created', django_extensions.db.fields.CreationDateTimeField(auto_now_add=True, verbose_name='created')),
                ('modified', django_extensions.db.fields.ModificationDateTimeField(auto_now=True, verbose_name='modified')),
                ('status', models.CharField(choices=[('OK', 'All rules OK'), ('KO', 'Counterexamples found'), ('ERROR', 'Rules in error')], max_length=5)),
                ('version', models.CharField(max_length=20)),
                ('schema_path', models.CharField(blank=True, max_length=500)),
                ('rules_ok', models.PositiveIntegerField(default=0)),
                ('rules_ko', models.PositiveIntegerField(default=0)),
                ('rules_error', models.PositiveIntegerField(default=0)),
                ('counterexample_count', models.PositiveIntegerField(default=0)),
                ('item_count', models.PositiveIntegerField(default=0)),
                ('wall_ms', models.FloatField(default=0)),
                ('report', models.JSONField()),
            ],
            options={
                'ordering': ['-created'],
            },
        ),
        migrations.CreateModel(
            name='RuleOutcome',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('rule', models.CharField(max_length=200)),
                ('status', models.CharField(choices=[('OK', 'OK'), ('KO', 'KO'), ('ERROR', 'ERROR')], max_length=5)),
                ('severity', models.CharField(default='ERROR', max_length=10)),
                ('error_class', models.CharField(blank=True, max_length=200)),
                ('selected', models.PositiveIntegerField(default=0)),
                ('counterexample_count', models.PositiveIntegerField(default=0)),
                ('timing_ms', models.FloatField(default=0)),
                ('campaign', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='outcomes', to='validation.campaignrun')),
            ],
            options={
                'ordering': ['rule'],
                'constraints': [models.UniqueConstraint(fields=('campaign', 'rule'), name='unique_rule_per_campaign')],
            },
        ),
    ]
