public class Fib2 {
    public static int fib(int num){
        int f1=0, f2=1, c=0;
        if((num == 0) || (num == 1)) return num;
        for (int j =2; j<=num; j++){
            c=f1+f2; f1=f2; f2=c;
        }
        return c;
    }
}
