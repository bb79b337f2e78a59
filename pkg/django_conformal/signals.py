from django.dispatch import Signal

# sent with ``table`` after every zcount
partition_table_computed = Signal()
