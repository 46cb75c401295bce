# Generated by Django 4.2.16 on 2026-10-17 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='RegisteredProblem',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('name', models.SlugField(help_text='Catalog name used by --problem and the API', max_length=100, unique=True)),
                ('description', models.TextField(blank=True, help_text='Free text shown in catalog listings', max_length=1000)),
                ('document', models.JSONField(help_text='Problem document: n, quadratic_f, linear_h, linear_g, coordinate_F1, coordinate_F2')),
                ('created_at', models.DateTimeField(auto_now_add=True, help_text='When the problem was registered')),
                ('updated_at', models.DateTimeField(auto_now=True, help_text='Last time the document was changed')),
            ],
            options={
                'verbose_name': 'Registered Problem',
                'verbose_name_plural': 'Registered Problems',
                'ordering': ['name'],
            },
        ),
        migrations.CreateModel(
            name='RunRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('subcommand', models.CharField(db_index=True, help_text='classify, regularize, scno, landscape, catalog or selftest', max_length=20)),
                ('problem', models.CharField(blank=True, help_text='Catalog name or problem file path, empty for selftest', max_length=200)),
                ('verdict', models.CharField(choices=[('positive', 'Positive'), ('negative', 'Negative'), ('error', 'Error')], help_text='Outcome of the run', max_length=10)),
                ('seed', models.IntegerField(default=42, help_text='Seed used by randomized parts of the run')),
                ('records', models.JSONField(blank=True, default=list, help_text='The JSON records the run printed, in order')),
                ('created_at', models.DateTimeField(auto_now_add=True, db_index=True, help_text='When the run finished')),
            ],
            options={
                'verbose_name': 'Run Record',
                'verbose_name_plural': 'Run Records',
                'ordering': ['-created_at'],
            },
        ),
        migrations.AddIndex(
            model_name='runrecord',
            index=models.Index(fields=['subcommand', '-created_at'], name='mpoc_run_subcmd_idx'),
        ),
        migrations.AddIndex(
            model_name='runrecord',
            index=models.Index(fields=['verdict'], name='mpoc_run_verdict_idx'),
        ),
    ]
